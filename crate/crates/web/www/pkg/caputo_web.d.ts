/* tslint:disable */
/* eslint-disable */

/**
 * The kernel `h(t, xi)` by contour quadrature and on the real axis.
 */
export function kernel_pair(alpha: number, t: number, xi: number): Float64Array;

/**
 * Decay of the first sine mode under the discrete Laplacian:
 * `[t, computed amplitude, Mittag-Leffler amplitude]` per time node.
 */
export function mode_decay(alpha: number, n: number, steps: number): Float64Array;

/**
 * Solves the problem described by an INI configuration and returns
 * `[x_0 .. x_{n+1}, u_0 .. u_{n+1}]` at the final time (real parts).
 */
export function solve_config(ini: string): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly kernel_pair: (a: number, b: number, c: number) => [number, number, number, number];
    readonly mode_decay: (a: number, b: number, c: number) => [number, number, number, number];
    readonly solve_config: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
