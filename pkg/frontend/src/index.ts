export { parseCsv, readCsv, column, columnsByPrefix, CsvError } from "./csv.js";
export type { Table } from "./csv.js";
export {
  renderFigure,
  renderControls,
  renderDynamics,
  renderResiduals,
  renderSpectrum,
  renderWigner,
} from "./figures.js";
export type { FigureKind } from "./figures.js";
