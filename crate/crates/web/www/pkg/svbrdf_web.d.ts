/* tslint:disable */
/* eslint-disable */

/**
 * BRDF luminance in the plane of incidence for `samples` outgoing angles
 * spread over (-90, 90) degrees, light at `incidence_deg` from the normal.
 */
export function brdf_lobe(roughness: number, f0: number, incidence_deg: number, samples: number): Float64Array;

/**
 * Corrupts the checker albedo with uniform noise of amplitude `noise` and
 * refines it with the diffuse CRF preset, its pairwise weights multiplied by
 * `smoothing`, guided by the rendered image. Returns RGBA rows of the noisy
 * and refined albedo side by side.
 */
export function dcrf_denoise(size: number, noise: number, smoothing: number, seed: bigint): Uint8Array;

/**
 * RGBA pixels of a bumpy checker material lit by a point light at
 * `(light_x, light_y)` on the camera plane. Empty on invalid input.
 */
export function render_preview(size: number, roughness: number, f0: number, bump: number, light_x: number, light_y: number): Uint8Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly brdf_lobe: (a: number, b: number, c: number, d: number) => [number, number];
    readonly dcrf_denoise: (a: number, b: number, c: number, d: bigint) => [number, number];
    readonly render_preview: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
