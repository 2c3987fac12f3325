/**
 * Sample-to-rotation mapping.
 *
 * The map is linear and signed per axis: omega = gain * count, so a
 * positive and a negative reading of the same magnitude spin the model
 * in opposite directions at the same speed. The gain is a panel
 * setting with a default of 0.01 deg/s per count.
 */

import { AccelSample, AXES, RotationState } from './types.js';

export const DEFAULT_GAIN = 0.01;

export interface AngularVelocity {
  x: number;
  y: number;
  z: number;
}

export function mapSampleToRotation(
  sample: Pick<AccelSample, 'x' | 'y' | 'z'>,
  gain: number = DEFAULT_GAIN,
): AngularVelocity {
  return {
    x: gain * sample.x,
    y: gain * sample.y,
    z: gain * sample.z,
  };
}

export function zeroRotation(): RotationState {
  return {
    x: { angle: 0, omega: 0 },
    y: { angle: 0, omega: 0 },
    z: { angle: 0, omega: 0 },
  };
}

function wrapDegrees(angle: number): number {
  const wrapped = angle % 360;
  return wrapped < 0 ? wrapped + 360 : wrapped;
}

/** Adopt a new angular velocity without touching the angles. */
export function setVelocity(state: RotationState, omega: AngularVelocity): void {
  for (const axis of AXES) {
    state[axis].omega = omega[axis];
  }
}

/** Integrate the displayed angles over one frame of dt seconds. */
export function integrate(state: RotationState, dtSeconds: number): void {
  for (const axis of AXES) {
    const arm = state[axis];
    arm.angle = wrapDegrees(arm.angle + arm.omega * dtSeconds);
  }
}
