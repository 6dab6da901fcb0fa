export { g17 } from "./format.js";
export {
  CircuitBuilder,
  ProgramValidationError,
  type Operation,
  type Variant,
} from "./program.js";
export {
  compileProgram,
  runCli,
  runNullifiers,
  runRoute,
  runTeleport,
  runTomography,
  simulateSchedule,
  type LatticeOptions,
  type NullifierOptions,
  type RouteOptions,
  type RunOutput,
  type SimulateOptions,
  type TeleportOptions,
  type TomographyOptions,
} from "./cli.js";
export { readFrame, readRecordsCsv, type TrialRecords } from "./records.js";
