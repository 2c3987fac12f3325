/**
 * Panel state: everything the render loop reads, updated only through
 * the mutators here so ordering rules hold in one place.
 */

import { DEFAULT_GAIN, mapSampleToRotation, setVelocity, zeroRotation } from './rotation.js';
import { AccelSample, DeviceInfo, RegisterTransaction, RotationState } from './types.js';

export const SAMPLE_RING_CAPACITY = 1024;

export interface PanelState {
  device: DeviceInfo | null;
  lastTransaction: RegisterTransaction | null;
  portMask: number;
  samples: AccelSample[];
  rotation: RotationState;
  gain: number;
  /** Highest sample tick accepted so far; stale frames are dropped. */
  latestTick: number;
  /** Per-action status line, keyed by form name. */
  status: Map<string, string>;
}

export function createPanelState(): PanelState {
  return {
    device: null,
    lastTransaction: null,
    portMask: 0,
    samples: [],
    rotation: zeroRotation(),
    gain: DEFAULT_GAIN,
    latestTick: -1,
    status: new Map(),
  };
}

/**
 * Accept a streamed sample: drop out-of-order frames, keep the ring
 * bounded, and retarget the rotation to the newest reading.
 */
export function pushSample(state: PanelState, sample: AccelSample): boolean {
  if (sample.tick <= state.latestTick) {
    return false;
  }
  state.latestTick = sample.tick;
  state.samples.push(sample);
  if (state.samples.length > SAMPLE_RING_CAPACITY) {
    state.samples.splice(0, state.samples.length - SAMPLE_RING_CAPACITY);
  }
  setVelocity(state.rotation, mapSampleToRotation(sample, state.gain));
  return true;
}

/** Lamp i (1-based) is lit exactly when bit i-1 of the mask is set. */
export function lampStates(mask: number, portCount: number): boolean[] {
  const lamps: boolean[] = [];
  for (let port = 1; port <= portCount; port++) {
    lamps.push((mask & (1 << (port - 1))) !== 0);
  }
  return lamps;
}

export function setGain(state: PanelState, gain: number): void {
  state.gain = gain;
  const latest = state.samples[state.samples.length - 1];
  if (latest) {
    setVelocity(state.rotation, mapSampleToRotation(latest, gain));
  }
}
