/**
 * Minimal PNG codec for 8-bit grayscale images, enough to read the street
 * raster channels the map tooling writes and to save sampled trajectory
 * images without pulling in an image library.
 */

import * as zlib from 'node:zlib';

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Buffer): number {
  let c = 0xffffffff;
  for (let i = 0; i < buf.length; i++) c = CRC_TABLE[(c ^ buf[i]) & 0xff] ^ (c >>> 8);
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Buffer): Buffer {
  const head = Buffer.concat([Buffer.from(type, 'latin1'), data]);
  const out = Buffer.alloc(head.length + 8);
  out.writeUInt32BE(data.length, 0);
  head.copy(out, 4);
  out.writeUInt32BE(crc32(head), head.length + 4);
  return out;
}

export function encodeGrayPng(data: Uint8Array, width: number, height: number): Buffer {
  if (data.length !== width * height) {
    throw new RangeError(`pixel count ${data.length} does not match ${width}x${height}`);
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 0; // grayscale
  // raw scanlines, filter type 0
  const raw = Buffer.alloc(height * (width + 1));
  for (let r = 0; r < height; r++) {
    raw[r * (width + 1)] = 0;
    raw.set(data.subarray(r * width, (r + 1) * width), r * (width + 1) + 1);
  }
  return Buffer.concat([
    SIGNATURE,
    chunk('IHDR', ihdr),
    chunk('IDAT', zlib.deflateSync(raw)),
    chunk('IEND', Buffer.alloc(0)),
  ]);
}

export interface GrayPng {
  width: number;
  height: number;
  data: Uint8Array;
}

export function decodeGrayPng(buf: Buffer): GrayPng {
  if (!buf.subarray(0, 8).equals(SIGNATURE)) throw new Error('not a PNG file');
  let width = 0;
  let height = 0;
  const idat: Buffer[] = [];
  let pos = 8;
  while (pos < buf.length) {
    const len = buf.readUInt32BE(pos);
    const type = buf.toString('latin1', pos + 4, pos + 8);
    const data = buf.subarray(pos + 8, pos + 8 + len);
    if (type === 'IHDR') {
      width = data.readUInt32BE(0);
      height = data.readUInt32BE(4);
      const [depth, color, , , interlace] = [data[8], data[9], data[10], data[11], data[12]];
      if (depth !== 8 || color !== 0 || interlace !== 0) {
        throw new Error(`unsupported PNG layout: depth ${depth}, color type ${color}, interlace ${interlace}`);
      }
    } else if (type === 'IDAT') {
      idat.push(Buffer.from(data));
    } else if (type === 'IEND') {
      break;
    }
    pos += 12 + len;
  }
  const raw = zlib.inflateSync(Buffer.concat(idat));
  const stride = width + 1;
  if (raw.length < height * stride) throw new Error('truncated PNG data');
  const out = new Uint8Array(width * height);
  // unfilter; bytes-per-pixel is 1 so "left" is the previous byte
  for (let r = 0; r < height; r++) {
    const filter = raw[r * stride];
    const row = raw.subarray(r * stride + 1, (r + 1) * stride);
    const prev = r > 0 ? out.subarray((r - 1) * width, r * width) : null;
    const cur = out.subarray(r * width, (r + 1) * width);
    for (let c = 0; c < width; c++) {
      const left = c > 0 ? cur[c - 1] : 0;
      const up = prev ? prev[c] : 0;
      const upLeft = prev && c > 0 ? prev[c - 1] : 0;
      let v = row[c];
      switch (filter) {
        case 0:
          break;
        case 1:
          v += left;
          break;
        case 2:
          v += up;
          break;
        case 3:
          v += (left + up) >> 1;
          break;
        case 4: {
          const p = left + up - upLeft;
          const pa = Math.abs(p - left);
          const pb = Math.abs(p - up);
          const pc = Math.abs(p - upLeft);
          v += pa <= pb && pa <= pc ? left : pb <= pc ? up : upLeft;
          break;
        }
        default:
          throw new Error(`unknown PNG filter type ${filter}`);
      }
      cur[c] = v & 0xff;
    }
  }
  return { width, height, data: out };
}
