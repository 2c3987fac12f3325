/**
 * Panel controller: form actions in, state mutations out.
 *
 * Keeping this DOM-free makes every behaviour testable headless; the
 * DOM layer in main.ts only forwards events here and paints from the
 * state on the render loop. Action failures land in a per-action
 * status line and never throw past the controller, so one rejected
 * command leaves the rest of the panel working.
 */

import { ApiClient, ApiFailure } from './api.js';
import { lampStates, PanelState, pushSample, setGain } from './state.js';
import { AccelSample } from './types.js';

export const DEFAULT_PORT_COUNT = 3;

export function parseHexOffset(text: string): number {
  if (!/^[0-9a-fA-F]+$/.test(text)) {
    throw new Error(`not a hex offset: ${text}`);
  }
  return parseInt(text, 16);
}

export class PanelController {
  constructor(
    readonly state: PanelState,
    private readonly api: ApiClient,
    readonly portCount: number = DEFAULT_PORT_COUNT,
  ) {}

  private async run(action: string, work: () => Promise<string>): Promise<void> {
    try {
      this.state.status.set(action, await work());
    } catch (err) {
      const detail = err instanceof ApiFailure ? err.message : String(err);
      this.state.status.set(action, `error: ${detail}`);
    }
  }

  refreshDevice(): Promise<void> {
    return this.run('device', async () => {
      this.state.device = await this.api.device();
      const phys = this.state.device.bar0_phys;
      return phys === null ? 'no mapped window' : `bar0 addr:0x${phys.toString(16).toUpperCase()}`;
    });
  }

  readRegister(offsetHex: string, len: number): Promise<void> {
    return this.run('register', async () => {
      const offset = parseHexOffset(offsetHex);
      const result = await this.api.readRegister(offset, len);
      this.state.lastTransaction = { kind: 'read', offset, length: result.len, value: result.data };
      return `read data:${result.data} datasize:${result.len}`;
    });
  }

  writeRegister(offsetHex: string, dataText: string, len: number): Promise<void> {
    return this.run('register', async () => {
      const offset = parseHexOffset(offsetHex);
      const data = Number(dataText);
      if (!Number.isInteger(data) || data < 0) {
        throw new Error(`not an unsigned integer: ${dataText}`);
      }
      const result = await this.api.writeRegister(offset, data, len);
      this.state.lastTransaction = { kind: 'write', offset, length: len, value: data };
      return `written:${result.written}`;
    });
  }

  linkCommand(port: number, action: 'enable' | 'reset'): Promise<void> {
    return this.run(`link${port}`, async () => {
      if (action === 'enable') await this.api.linkEnable(port);
      else await this.api.linkReset(port);
      return `link ${action} ${port}:ok`;
    });
  }

  discover(): Promise<void> {
    return this.run('ports', async () => {
      this.state.portMask = await this.api.portMask();
      return `port mask:0x${this.state.portMask.toString(16).toUpperCase().padStart(2, '0')}`;
    });
  }

  acquire(maxBytes = 65536): Promise<void> {
    return this.run('acquire', async () => {
      const result = await this.api.acquire(maxBytes);
      return `acquired bytes:${result.bytes} packets:${result.packets.length}`;
    });
  }

  inject(x: number, y: number, z: number): Promise<void> {
    return this.run('inject', async () => {
      await this.api.inject(x, y, z);
      return 'inject:ok';
    });
  }

  tick(n: number): Promise<void> {
    return this.run('tick', async () => {
      const tick = await this.api.tick(n);
      return `tick:${tick}`;
    });
  }

  setGain(gain: number): void {
    if (Number.isFinite(gain)) {
      setGain(this.state, gain);
    }
  }

  /** Stream callback: accepts in-order samples, ignores stale ones. */
  onStreamSample(sample: AccelSample): boolean {
    return pushSample(this.state, sample);
  }

  lamps(): boolean[] {
    return lampStates(this.state.portMask, this.portCount);
  }
}
