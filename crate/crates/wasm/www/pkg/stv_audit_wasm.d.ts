/* tslint:disable */
/* eslint-disable */

/**
 * Approximate sample size for a margin in votes, plus a curve over `margins`.
 */
export function asn(margin: number, params: number, alpha0: number, alpha_k: number, population: bigint, margins: Float64Array): string;

/**
 * Audit graph at least auditable margin `lam` after adding `ghosts` empty ballots.
 */
export function audit_graph(blt: string, seats: number | null | undefined, lam: number, ghosts: number): string;

/**
 * Hypergeometric tail at `observed` and the upper confidence bound on successes.
 */
export function hypergeometric(population: bigint, successes: bigint, draws: bigint, observed: bigint, alpha: number): string;

/**
 * The bundled Ward 9 ballot file.
 */
export function sample_ballots(): string;

/**
 * Round-by-round tallies under `rule` (`"meek"` or `"wigm"`).
 */
export function tally(blt: string, rule: string, seats?: number | null): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly asn: (a: number, b: number, c: number, d: number, e: bigint, f: number, g: number) => [number, number, number, number];
    readonly audit_graph: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly hypergeometric: (a: bigint, b: bigint, c: bigint, d: bigint, e: number) => [number, number, number, number];
    readonly sample_ballots: () => [number, number];
    readonly tally: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
