#!/usr/bin/env node
import { run } from "../cli.js";

process.exit(run("dynamics", process.argv.slice(2)));
