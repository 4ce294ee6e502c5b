import { el } from "./dom";
import { gridExtents } from "./gridFormat";
import type { VolumeGrid } from "./types";

const VERT = `#version 300 es
in vec2 quad;
out vec2 uv;
void main() {
  uv = quad * 0.5 + 0.5;
  gl_Position = vec4(quad, 0.0, 1.0);
}`;

// Ray casting through a unit box holding the normalized density texture:
// front-to-back emission-absorption compositing, or maximum intensity.
const FRAG = `#version 300 es
precision highp float;
precision highp sampler3D;
in vec2 uv;
out vec4 color;
uniform sampler3D volume;
uniform vec3 scale;     // box half-extents, normalized
uniform mat3 rotation;
uniform float stepLen;
uniform float threshold;
uniform int useMip;

vec2 boxHits(vec3 ro, vec3 rd, vec3 half_) {
  vec3 inv = 1.0 / rd;
  vec3 t0 = (-half_ - ro) * inv;
  vec3 t1 = (half_ - ro) * inv;
  vec3 tlo = min(t0, t1);
  vec3 thi = max(t0, t1);
  return vec2(max(max(tlo.x, tlo.y), tlo.z), min(min(thi.x, thi.y), thi.z));
}

void main() {
  vec3 ro = rotation * vec3((uv - 0.5) * 2.2, -3.0);
  vec3 rd = normalize(rotation * vec3(0.0, 0.0, 1.0));
  vec2 hits = boxHits(ro, rd, scale);
  if (hits.x >= hits.y) { color = vec4(0.04, 0.05, 0.08, 1.0); return; }

  float t = max(hits.x, 0.0);
  float best = 0.0;
  vec3 acc = vec3(0.0);
  float alpha = 0.0;
  for (int i = 0; i < 512; i++) {
    if (t >= hits.y) break;
    vec3 p = ro + rd * t;
    vec3 tc = p / (2.0 * scale) + 0.5;
    float v = texture(volume, tc).r;
    if (v >= threshold) {
      if (useMip == 1) {
        best = max(best, v);
      } else {
        float a = clamp(v * 0.25, 0.0, 1.0);
        vec3 emitted = mix(vec3(0.13, 0.32, 0.65), vec3(1.0, 0.92, 0.75), v);
        acc += (1.0 - alpha) * a * emitted;
        alpha += (1.0 - alpha) * a;
        if (alpha > 0.98) break;
      }
    }
    t += stepLen;
  }
  if (useMip == 1) {
    vec3 tint = mix(vec3(0.05, 0.07, 0.12), vec3(0.95, 0.97, 1.0), best);
    color = vec4(tint, 1.0);
  } else {
    color = vec4(acc + vec3(0.04, 0.05, 0.08) * (1.0 - alpha), 1.0);
  }
}`;

export interface VolumePanelOptions {
  shader: "mip" | "emission";
  threshold: number; // attribute filter slider, 0..1 of the value range
  rotationY: number; // radians
}

function compile(gl: WebGL2RenderingContext, kind: number, src: string): WebGLShader {
  const shader = gl.createShader(kind)!;
  gl.shaderSource(shader, src);
  gl.compileShader(shader);
  if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
    throw new Error(gl.getShaderInfoLog(shader) ?? "shader compile failed");
  }
  return shader;
}

/** One 3D panel. Renders with WebGL2 when available; in contexts without GL
 * (tests, headless) it falls back to a data summary read from the grid
 * header, which is everything the assertions need. */
export class VolumePanel {
  readonly root: HTMLElement;
  private canvas: HTMLCanvasElement;
  private gl: WebGL2RenderingContext | null;
  private program: WebGLProgram | null = null;
  private texture: WebGLTexture | null = null;
  private info: HTMLElement;
  lastGrid: VolumeGrid | null = null;

  constructor(title: string, size = 320) {
    this.root = el("div", { class: "volume-panel" });
    this.root.appendChild(el("div", { class: "panel-note" }, title));
    this.canvas = el("canvas", { width: String(size), height: String(size) });
    this.root.appendChild(this.canvas);
    this.info = el("div", { class: "volume-info" });
    this.root.appendChild(this.info);
    // feature-detect before touching getContext: jsdom has no GL and its
    // stub logs a noisy "not implemented" error
    this.gl = typeof WebGL2RenderingContext !== "undefined"
      ? this.canvas.getContext("webgl2")
      : null;
    if (this.gl) this.setupProgram(this.gl);
    else this.canvas.classList.add("no-gl");
  }

  private setupProgram(gl: WebGL2RenderingContext): void {
    const program = gl.createProgram()!;
    gl.attachShader(program, compile(gl, gl.VERTEX_SHADER, VERT));
    gl.attachShader(program, compile(gl, gl.FRAGMENT_SHADER, FRAG));
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
      throw new Error(gl.getProgramInfoLog(program) ?? "link failed");
    }
    const quad = gl.createBuffer();
    gl.bindBuffer(gl.ARRAY_BUFFER, quad);
    gl.bufferData(gl.ARRAY_BUFFER,
      new Float32Array([-1, -1, 1, -1, -1, 1, 1, -1, 1, 1, -1, 1]), gl.STATIC_DRAW);
    gl.useProgram(program);
    const loc = gl.getAttribLocation(program, "quad");
    gl.enableVertexAttribArray(loc);
    gl.vertexAttribPointer(loc, 2, gl.FLOAT, false, 0, 0);
    this.program = program;
  }

  /** Upload the grid's primary channel normalized to [0, 1] as an R8 texture. */
  setGrid(grid: VolumeGrid): void {
    this.lastGrid = grid;
    const [ex, ey, ez] = gridExtents(grid.header);
    const [lo, hi] = grid.header.value_range;
    this.info.textContent =
      `${grid.header.attribute} ${grid.header.dims.join("×")} ` +
      `extent ${ex.toFixed(2)}×${ey.toFixed(2)}×${ez.toFixed(2)} m ` +
      `range [${lo.toPrecision(4)}, ${hi.toPrecision(4)}]`;
    this.info.dataset.extentX = String(ex);
    this.info.dataset.extentY = String(ey);
    this.info.dataset.extentZ = String(ez);

    const gl = this.gl;
    if (!gl) return;
    const data = grid.channels[grid.header.channels.length > 1 ? 1 : 0] ?? grid.channels[0];
    const span = hi > lo ? hi - lo : 1;
    const bytes = new Uint8Array(data.length);
    for (let i = 0; i < data.length; i++) {
      bytes[i] = Math.max(0, Math.min(255, Math.round(((data[i] - lo) / span) * 255)));
    }
    const [nx, ny, nz] = grid.header.dims;
    if (this.texture) gl.deleteTexture(this.texture);
    this.texture = gl.createTexture();
    gl.bindTexture(gl.TEXTURE_3D, this.texture);
    gl.pixelStorei(gl.UNPACK_ALIGNMENT, 1);
    gl.texImage3D(gl.TEXTURE_3D, 0, gl.R8, nx, ny, nz, 0, gl.RED, gl.UNSIGNED_BYTE, bytes);
    gl.texParameteri(gl.TEXTURE_3D, gl.TEXTURE_MIN_FILTER, gl.LINEAR);
    gl.texParameteri(gl.TEXTURE_3D, gl.TEXTURE_MAG_FILTER, gl.LINEAR);
    gl.texParameteri(gl.TEXTURE_3D, gl.TEXTURE_WRAP_S, gl.CLAMP_TO_EDGE);
    gl.texParameteri(gl.TEXTURE_3D, gl.TEXTURE_WRAP_T, gl.CLAMP_TO_EDGE);
    gl.texParameteri(gl.TEXTURE_3D, gl.TEXTURE_WRAP_R, gl.CLAMP_TO_EDGE);
  }

  render(options: VolumePanelOptions): void {
    const gl = this.gl;
    const grid = this.lastGrid;
    if (!gl || !this.program || !grid || !this.texture) return;
    gl.viewport(0, 0, this.canvas.width, this.canvas.height);
    gl.useProgram(this.program);
    gl.activeTexture(gl.TEXTURE0);
    gl.bindTexture(gl.TEXTURE_3D, this.texture);
    gl.uniform1i(gl.getUniformLocation(this.program, "volume"), 0);

    const extents = gridExtents(grid.header);
    const longest = Math.max(...extents);
    gl.uniform3f(gl.getUniformLocation(this.program, "scale"),
      extents[0] / longest, extents[1] / longest, extents[2] / longest);
    const c = Math.cos(options.rotationY);
    const s = Math.sin(options.rotationY);
    gl.uniformMatrix3fv(gl.getUniformLocation(this.program, "rotation"), false,
      new Float32Array([c, 0, s, 0, 1, 0, -s, 0, c]));
    gl.uniform1f(gl.getUniformLocation(this.program, "stepLen"),
      1.0 / Math.max(...grid.header.dims));
    gl.uniform1f(gl.getUniformLocation(this.program, "threshold"), options.threshold);
    gl.uniform1i(gl.getUniformLocation(this.program, "useMip"),
      options.shader === "mip" ? 1 : 0);
    gl.drawArrays(gl.TRIANGLES, 0, 6);
  }
}
