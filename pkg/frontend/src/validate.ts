/** Client-side checks mirroring the analysis spec invariants, so bad
 * test/variable-type combinations are rejected inline before any request
 * is sent. Column types come from the columns endpoint.
 */

import { AnalyzeRequest } from "./types.js";

export type ColumnTypes = Record<string, boolean>; // column -> is numeric

export function validateAnalysisRequest(
  test: AnalyzeRequest["test"],
  dependent: string,
  independent: string | undefined,
  numeric: ColumnTypes,
): string | null {
  if (!(dependent in numeric)) {
    return `unknown column ${dependent}`;
  }
  if (!numeric[dependent]) {
    return `dependent variable ${dependent} must be numeric`;
  }
  if (test === "summary") {
    return null;
  }
  if (!independent) {
    return `${test} needs an independent variable`;
  }
  if (!(independent in numeric)) {
    return `unknown column ${independent}`;
  }
  if (test === "spearman" && !numeric[independent]) {
    return `spearman needs a numeric independent variable, ${independent} is categorical`;
  }
  if ((test === "kruskal_wallis" || test === "anova") && numeric[independent]) {
    return `${test} needs a categorical independent variable, ${independent} is numeric`;
  }
  return null;
}

export function validatePlotRequest(
  kind: "scatter" | "box",
  dependent: string,
  independent: string,
  numeric: ColumnTypes,
): string | null {
  if (!numeric[dependent]) {
    return `dependent variable ${dependent} must be numeric`;
  }
  if (kind === "box" && numeric[independent]) {
    return `box plots need a categorical independent variable, ${independent} is numeric`;
  }
  if (kind === "scatter" && !numeric[independent]) {
    return `scatter plots need a numeric independent variable, ${independent} is categorical`;
  }
  return null;
}
