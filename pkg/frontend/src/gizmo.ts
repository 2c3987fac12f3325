/**
 * Canvas three-axis gizmo: a cuboid with one colored arrow per axis,
 * drawn with a hand-rolled rotation matrix and orthographic
 * projection. No GL context, so it runs anywhere a 2D canvas does.
 */

import { RotationState } from './types.js';

type Vec3 = [number, number, number];
type Mat3 = [number, number, number, number, number, number, number, number, number];

const DEG = Math.PI / 180;

function rotationMatrix(xDeg: number, yDeg: number, zDeg: number): Mat3 {
  const [sx, cx] = [Math.sin(xDeg * DEG), Math.cos(xDeg * DEG)];
  const [sy, cy] = [Math.sin(yDeg * DEG), Math.cos(yDeg * DEG)];
  const [sz, cz] = [Math.sin(zDeg * DEG), Math.cos(zDeg * DEG)];
  // R = Rz * Ry * Rx, applied to column vectors.
  return [
    cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx,
    sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx,
    -sy, cy * sx, cy * cx,
  ];
}

function apply(m: Mat3, v: Vec3): Vec3 {
  return [
    m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
    m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
    m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
  ];
}

const CUBOID: Vec3[] = [
  [-1, -0.6, -0.25], [1, -0.6, -0.25], [1, 0.6, -0.25], [-1, 0.6, -0.25],
  [-1, -0.6, 0.25], [1, -0.6, 0.25], [1, 0.6, 0.25], [-1, 0.6, 0.25],
];

const EDGES: Array<[number, number]> = [
  [0, 1], [1, 2], [2, 3], [3, 0],
  [4, 5], [5, 6], [6, 7], [7, 4],
  [0, 4], [1, 5], [2, 6], [3, 7],
];

const AXIS_ARROWS: Array<{ tip: Vec3; color: string; label: string }> = [
  { tip: [1.6, 0, 0], color: '#e53e3e', label: 'X' },
  { tip: [0, 1.6, 0], color: '#38a169', label: 'Y' },
  { tip: [0, 0, 1.6], color: '#3182ce', label: 'Z' },
];

export class Gizmo {
  private readonly ctx: CanvasRenderingContext2D;

  constructor(private readonly canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext('2d');
    if (!ctx) throw new Error('2d canvas unavailable');
    this.ctx = ctx;
  }

  render(rotation: RotationState): void {
    const { ctx, canvas } = this;
    const w = canvas.width;
    const h = canvas.height;
    const scale = Math.min(w, h) / 4.2;
    const cx = w / 2;
    const cy = h / 2;
    const m = rotationMatrix(rotation.x.angle, rotation.y.angle, rotation.z.angle);

    // Slight fixed isometric tilt so all three axes stay visible.
    const view = rotationMatrix(-20, 30, 0);
    const project = (v: Vec3): [number, number, number] => {
      const r = apply(view, apply(m, v));
      return [cx + r[0] * scale, cy - r[1] * scale, r[2]];
    };

    ctx.clearRect(0, 0, w, h);

    ctx.strokeStyle = '#9aa5b1';
    ctx.lineWidth = 1.5;
    const corners = CUBOID.map(project);
    for (const [a, b] of EDGES) {
      ctx.beginPath();
      ctx.moveTo(corners[a][0], corners[a][1]);
      ctx.lineTo(corners[b][0], corners[b][1]);
      ctx.stroke();
    }

    const origin = project([0, 0, 0]);
    for (const arrow of AXIS_ARROWS) {
      const tip = project(arrow.tip);
      ctx.strokeStyle = arrow.color;
      ctx.fillStyle = arrow.color;
      ctx.lineWidth = 2.5;
      ctx.beginPath();
      ctx.moveTo(origin[0], origin[1]);
      ctx.lineTo(tip[0], tip[1]);
      ctx.stroke();
      ctx.beginPath();
      ctx.arc(tip[0], tip[1], 4, 0, 2 * Math.PI);
      ctx.fill();
      ctx.font = '12px sans-serif';
      ctx.fillText(arrow.label, tip[0] + 6, tip[1] - 6);
    }
  }
}
