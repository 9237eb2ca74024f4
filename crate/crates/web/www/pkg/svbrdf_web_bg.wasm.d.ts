/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const brdf_lobe: (a: number, b: number, c: number, d: number) => [number, number];
export const dcrf_denoise: (a: number, b: number, c: number, d: bigint) => [number, number];
export const render_preview: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
