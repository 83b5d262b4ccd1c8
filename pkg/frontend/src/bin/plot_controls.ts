#!/usr/bin/env node
import { run } from "../cli.js";

process.exit(run("controls", process.argv.slice(2)));
