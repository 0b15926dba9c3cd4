/* tslint:disable */
/* eslint-disable */

export function fseVsSingleTap(subcarriers: number, nr: number, trials: number, seed: number): Float64Array;

export function multiuserSinr(subcarriers: number, users: number, nr: number, snr_db: number, trials: number, seed: number): Float64Array;

export function prototypeResponseDb(overlap: number, subcarriers: number, span: number): Float64Array;

export function prototypeTaps(overlap: number, subcarriers: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly fseVsSingleTap: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly multiuserSinr: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly prototypeResponseDb: (a: number, b: number, c: number) => [number, number, number, number];
    readonly prototypeTaps: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
