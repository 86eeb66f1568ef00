// Entry point: wire the controller to the page. Configuration comes from the
// query string: ?api=<base url>&run=<run id>.

import { ApiClient } from './api.js';
import { RunController } from './state.js';
import { render } from './ui.js';

const DEFAULT_API = 'http://127.0.0.1:8000';

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get('api') ?? DEFAULT_API;
  const runId = params.get('run');

  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app element');

  const client = new ApiClient(baseUrl);
  const controller = new RunController(client, { reviewer: params.get('reviewer') ?? 'reviewer' });

  let classNames: string[] = [];
  controller.subscribe((state) => render(root, state, controller, classNames));

  const form = document.getElementById('run-form') as HTMLFormElement | null;
  const input = document.getElementById('run-input') as HTMLInputElement | null;
  if (form && input) {
    if (runId) input.value = runId;
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      void load(input.value.trim());
    });
  }

  async function load(id: string): Promise<void> {
    if (!id) return;
    try {
      classNames = (await client.getRun(id)).class_names;
    } catch {
      classNames = [];
    }
    await controller.loadRun(id);
  }

  if (runId) await load(runId);
}

void boot();
