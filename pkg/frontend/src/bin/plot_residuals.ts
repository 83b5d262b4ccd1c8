#!/usr/bin/env node
import { run } from "../cli.js";

process.exit(run("residuals", process.argv.slice(2)));
