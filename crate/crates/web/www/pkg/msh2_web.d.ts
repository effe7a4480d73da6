/* tslint:disable */
/* eslint-disable */

/**
 * Optimal cost against the one-step delay probability `p`; the rest of the
 * mass is split between on-time delivery and loss (`loss`).
 */
export function delay_sweep(eps: number, late_weight: number, loss: number, steps: number): string;

/**
 * Minimum control power against erasure probability on `steps` points of `[0, 0.95]`.
 */
export function erasure_curve(a1: number, a2: number, steps: number): string;

/**
 * Minimum-phase factor of the noise spectrum for means `mu` and row-major covariance `beta`.
 */
export function spectral_factor(mu: Float64Array, beta: Float64Array): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly delay_sweep: (a: number, b: number, c: number, d: number) => [number, number];
    readonly erasure_curve: (a: number, b: number, c: number) => [number, number];
    readonly spectral_factor: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
