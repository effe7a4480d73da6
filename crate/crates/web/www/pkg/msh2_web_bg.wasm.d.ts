/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const delay_sweep: (a: number, b: number, c: number, d: number) => [number, number];
export const erasure_curve: (a: number, b: number, c: number) => [number, number];
export const spectral_factor: (a: number, b: number, c: number, d: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
