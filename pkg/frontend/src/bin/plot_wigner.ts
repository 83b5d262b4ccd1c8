#!/usr/bin/env node
import { run } from "../cli.js";

process.exit(run("wigner", process.argv.slice(2)));
