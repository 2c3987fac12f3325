/** DOM bootstrap: bind the forms, open the stream, run the render loop. */

import { ApiClient, openSampleStream } from './api.js';
import { Gizmo } from './gizmo.js';
import { PanelController } from './panel.js';
import { integrate } from './rotation.js';
import { createPanelState } from './state.js';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function bindForm(id: string, handler: (form: HTMLFormElement) => void): void {
  const form = el<HTMLFormElement>(id);
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    handler(form);
  });
}

function field(form: HTMLFormElement, name: string): string {
  return (form.elements.namedItem(name) as HTMLInputElement).value.trim();
}

function main(): void {
  const state = createPanelState();
  const controller = new PanelController(state, new ApiClient());
  const gizmo = new Gizmo(el<HTMLCanvasElement>('gizmo'));

  bindForm('read-form', (form) => {
    void controller.readRegister(field(form, 'offset'), Number(field(form, 'len') || '4'));
  });
  bindForm('write-form', (form) => {
    void controller.writeRegister(
      field(form, 'offset'), field(form, 'data'), Number(field(form, 'len') || '4'));
  });
  bindForm('inject-form', (form) => {
    void controller.inject(
      Number(field(form, 'x') || '0'),
      Number(field(form, 'y') || '0'),
      Number(field(form, 'z') || '0'));
  });

  el<HTMLButtonElement>('discover-btn').addEventListener('click', () => void controller.discover());
  el<HTMLButtonElement>('acquire-btn').addEventListener('click', () => void controller.acquire());
  el<HTMLButtonElement>('tick-btn').addEventListener('click', () => void controller.tick(10));
  for (let port = 1; port <= controller.portCount; port++) {
    el<HTMLButtonElement>(`enable-${port}`).addEventListener(
      'click', () => void controller.linkCommand(port, 'enable'));
    el<HTMLButtonElement>(`reset-${port}`).addEventListener(
      'click', () => void controller.linkCommand(port, 'reset'));
  }
  el<HTMLInputElement>('gain').addEventListener('change', (event) => {
    controller.setGain(Number((event.target as HTMLInputElement).value));
  });

  const wsUrl = `${location.protocol === 'https:' ? 'wss:' : 'ws:'}//${location.host}/api/stream`;
  openSampleStream(wsUrl, (sample) => controller.onStreamSample(sample), (connected) => {
    el('stream-status').textContent = connected ? 'stream: connected' : 'stream: reconnecting';
  });

  void controller.refreshDevice();
  void controller.discover();

  const statusIds: Array<[string, string]> = [
    ['device', 'device-status'], ['register', 'register-status'],
    ['ports', 'ports-status'], ['acquire', 'acquire-status'],
    ['inject', 'inject-status'], ['tick', 'tick-status'],
    ['link1', 'link-status'], ['link2', 'link-status'], ['link3', 'link-status'],
  ];

  let lastFrame = performance.now();
  const paint = (now: number) => {
    const dt = Math.min((now - lastFrame) / 1000, 0.1);
    lastFrame = now;
    integrate(state.rotation, dt);
    gizmo.render(state.rotation);

    for (const [action, id] of statusIds) {
      const line = state.status.get(action);
      if (line !== undefined) el(id).textContent = line;
    }
    controller.lamps().forEach((lit, index) => {
      el(`lamp-${index + 1}`).classList.toggle('lit', lit);
    });
    const latest = state.samples[state.samples.length - 1];
    el('sample-line').textContent = latest
      ? `tick ${latest.tick}: x=${latest.x} y=${latest.y} z=${latest.z}`
      : 'no samples yet';
    el('omega-line').textContent =
      `omega deg/s: x=${state.rotation.x.omega.toFixed(2)} ` +
      `y=${state.rotation.y.omega.toFixed(2)} z=${state.rotation.z.omega.toFixed(2)}`;

    requestAnimationFrame(paint);
  };
  requestAnimationFrame(paint);
}

main();
