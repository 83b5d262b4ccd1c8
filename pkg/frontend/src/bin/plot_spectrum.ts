#!/usr/bin/env node
import { run } from "../cli.js";

process.exit(run("spectrum", process.argv.slice(2)));
