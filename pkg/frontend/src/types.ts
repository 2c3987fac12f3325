/** Shared panel domain types. */

export interface AccelSample {
  tick: number;
  x: number;
  y: number;
  z: number;
}

export interface DeviceInfo {
  guid: string;
  bar0_phys: number | null;
  lifecycle: string;
  device_id: string;
  tick: number;
}

export interface RegisterTransaction {
  kind: 'read' | 'write';
  offset: number;
  length: number;
  value: number;
}

/** Per-axis rotation integrator state. */
export interface AxisRotation {
  /** Displayed angle in degrees, wrapped to [0, 360). */
  angle: number;
  /** Angular velocity in degrees per second. */
  omega: number;
}

export interface RotationState {
  x: AxisRotation;
  y: AxisRotation;
  z: AxisRotation;
}

export type Axis = 'x' | 'y' | 'z';

export const AXES: readonly Axis[] = ['x', 'y', 'z'];
