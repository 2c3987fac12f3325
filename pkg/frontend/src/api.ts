/**
 * Thin typed client for the control service HTTP/WS API.
 *
 * The fetch function is injectable so the client is testable without a
 * server; every helper either resolves with the parsed body or throws
 * an ApiFailure carrying the service's detail string.
 */

import { AccelSample, DeviceInfo } from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiFailure extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = 'ApiFailure';
  }
}

export interface RegisterReadResult {
  offset: number;
  len: number;
  data: number;
}

export interface WriteResult {
  offset: number;
  len: number;
  written: number;
}

export interface LinkResult {
  port: number;
  action: string;
  status: string;
}

export interface AcquireResult {
  bytes: number;
  packets: string[];
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiFailure(0, `service unreachable: ${String(err)}`);
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail = typeof body.detail === 'string' ? body.detail : response.statusText;
      throw new ApiFailure(response.status, detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: payload === undefined ? '{}' : JSON.stringify(payload),
    });
  }

  device(): Promise<DeviceInfo> {
    return this.request('/api/device');
  }

  readRegister(offset: number, len = 4): Promise<RegisterReadResult> {
    return this.request(`/api/registers?offset=${offset}&len=${len}`);
  }

  writeRegister(offset: number, data: number, len = 4): Promise<WriteResult> {
    return this.post('/api/registers', { offset, len, data });
  }

  linkEnable(port: number): Promise<LinkResult> {
    return this.post(`/api/links/${port}/enable`);
  }

  linkReset(port: number): Promise<LinkResult> {
    return this.post(`/api/links/${port}/reset`);
  }

  async portMask(): Promise<number> {
    const body = await this.request<{ mask: number }>('/api/ports');
    return body.mask;
  }

  acquire(maxBytes = 65536): Promise<AcquireResult> {
    return this.post('/api/acquire', { max_bytes: maxBytes });
  }

  inject(x: number, y: number, z: number): Promise<{ status: string }> {
    return this.post('/api/inject', { x, y, z });
  }

  async tick(n = 1): Promise<number> {
    const body = await this.post<{ tick: number }>('/api/tick', { n });
    return body.tick;
  }
}

export type StreamHandler = (sample: AccelSample) => void;

/** Open the sample stream; reconnects with a fixed backoff until closed. */
export function openSampleStream(
  url: string,
  onSample: StreamHandler,
  onStatus: (connected: boolean) => void = () => {},
): () => void {
  let socket: WebSocket | null = null;
  let timer: ReturnType<typeof setTimeout> | null = null;
  let closed = false;

  const connect = () => {
    if (closed) return;
    socket = new WebSocket(url);
    socket.onopen = () => onStatus(true);
    socket.onmessage = (event) => {
      const frame = JSON.parse(event.data as string) as AccelSample;
      onSample(frame);
    };
    socket.onclose = () => {
      onStatus(false);
      if (!closed) timer = setTimeout(connect, 2000);
    };
    socket.onerror = () => socket?.close();
  };

  connect();
  return () => {
    closed = true;
    if (timer) clearTimeout(timer);
    socket?.close();
  };
}
