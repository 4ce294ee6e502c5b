import type { GridHeader, VolumeGrid } from "./types";

/**
 * Parse the service's volume payload: a little-endian uint64 header length,
 * a UTF-8 JSON header, then one float32 block per channel in x-fastest order.
 */
export function parseGrid(buffer: ArrayBuffer): VolumeGrid {
  const view = new DataView(buffer);
  if (buffer.byteLength < 8) throw new Error("grid payload too short");
  const headerLen = Number(view.getBigUint64(0, true));
  if (8 + headerLen > buffer.byteLength) throw new Error("grid header truncated");
  const headerText = new TextDecoder().decode(new Uint8Array(buffer, 8, headerLen));
  const header = JSON.parse(headerText) as GridHeader;

  const [nx, ny, nz] = header.dims;
  const nvox = nx * ny * nz;
  const body = buffer.byteLength - 8 - headerLen;
  const expected = nvox * 4 * header.channels.length;
  if (body !== expected) {
    throw new Error(`grid payload is ${body} bytes, expected ${expected}`);
  }
  const channels: Float32Array[] = [];
  for (let c = 0; c < header.channels.length; c++) {
    // copy so the typed array is aligned and independent of the transfer buffer
    channels.push(new Float32Array(buffer.slice(8 + headerLen + c * nvox * 4,
                                                8 + headerLen + (c + 1) * nvox * 4)));
  }
  return { header, channels };
}

/** Axis extents (hi - lo) of the grid bounds. */
export function gridExtents(header: GridHeader): [number, number, number] {
  return [
    header.bounds[0][1] - header.bounds[0][0],
    header.bounds[1][1] - header.bounds[1][0],
    header.bounds[2][1] - header.bounds[2][0],
  ];
}
