#!/usr/bin/env node
/**
 * viz --artifact DIR --fig KIND --out PATH [--table NAME] [--style FILE]
 *
 * KIND is one of:
 *   exponent-fit   log-log scan + fitted line (+ target band); needs --table
 *   ray-fan        characteristic trajectories with tube envelopes
 *   residuals      identity residuals vs dt, or packet residual vs frequency
 *
 * Slope annotations are read from the artifact's report.json verbatim.
 */

import { readFileSync, writeFileSync, existsSync } from "fs";
import path from "path";
import { fileURLToPath } from "url";

import {
  exponentTableNames, plotExponentFit, plotRayFan, plotResiduals,
} from "./figures.js";
import { DEFAULT_STYLE, Style } from "./svg.js";

interface Args {
  artifact?: string;
  fig?: string;
  out?: string;
  table?: string;
  style?: string;
}

function parseArgs(argv: string[]): Args {
  const args: Args = {};
  for (let i = 0; i < argv.length; i += 1) {
    const name = argv[i];
    if (!name.startsWith("--")) {
      throw new Error(`unexpected argument '${name}'`);
    }
    const key = name.slice(2) as keyof Args;
    if (!["artifact", "fig", "out", "table", "style"].includes(key)) {
      throw new Error(`unknown flag '${name}'`);
    }
    const value = argv[i + 1];
    if (value === undefined) {
      throw new Error(`flag '${name}' needs a value`);
    }
    args[key] = value;
    i += 1;
  }
  return args;
}

function loadStyle(stylePath?: string): Style {
  const fallback = path.join(
    path.dirname(fileURLToPath(import.meta.url)), "..", "style.json");
  const file = stylePath ?? (existsSync(fallback) ? fallback : undefined);
  if (!file) return DEFAULT_STYLE;
  return { ...DEFAULT_STYLE, ...JSON.parse(readFileSync(file, "utf8")) };
}

export function run(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  if (!args.artifact || !args.fig || !args.out) {
    console.error(
      "usage: viz --artifact DIR --fig KIND --out PATH [--table NAME]");
    return 2;
  }
  try {
    const style = loadStyle(args.style);
    let svg: string;
    switch (args.fig) {
      case "exponent-fit":
        if (!args.table) {
          console.error(
            `--fig exponent-fit needs --table NAME; known tables: ` +
            exponentTableNames().join(", "));
          return 2;
        }
        svg = plotExponentFit(args.artifact, args.table, style);
        break;
      case "ray-fan":
        svg = plotRayFan(args.artifact, style);
        break;
      case "residuals":
        svg = plotResiduals(args.artifact, style);
        break;
      default:
        console.error(
          `unknown figure kind '${args.fig}'; ` +
          "expected exponent-fit, ray-fan, or residuals");
        return 2;
    }
    writeFileSync(args.out, svg);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

const isMain = process.argv[1] &&
  fileURLToPath(import.meta.url) === path.resolve(process.argv[1]);
if (isMain) {
  process.exit(run(process.argv.slice(2)));
}
