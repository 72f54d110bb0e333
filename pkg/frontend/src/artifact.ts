/**
 * Run-artifact access: scan tables (CSV) and the report/manifest JSON.
 *
 * Every loader fails fast with an error naming the missing table so a
 * half-written or wrong directory is diagnosed immediately.
 */

import { readFileSync, existsSync } from "fs";
import path from "path";

export interface ScanTable {
  header: string[];
  rows: number[][];
}

export class MissingTableError extends Error {
  constructor(public readonly table: string) {
    super(`missing table: ${table}`);
    this.name = "MissingTableError";
  }
}

/** Parse the numeric CSV format written by the experiment runner. */
export function parseScanCsv(text: string): ScanTable {
  const lines = text.trim().split(/\r?\n/);
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(",").map(Number));
  return { header, rows };
}

export function readTable(artifactDir: string, name: string): ScanTable {
  const file = path.join(artifactDir, name);
  if (!existsSync(file)) {
    throw new MissingTableError(file);
  }
  return parseScanCsv(readFileSync(file, "utf8"));
}

export function hasTable(artifactDir: string, name: string): boolean {
  return existsSync(path.join(artifactDir, name));
}

export function readJson(artifactDir: string, name: string): any {
  const file = path.join(artifactDir, name);
  if (!existsSync(file)) {
    throw new MissingTableError(file);
  }
  return JSON.parse(readFileSync(file, "utf8"));
}

export function readReport(artifactDir: string): any {
  return readJson(artifactDir, "report.json");
}
