// DOM rendering. Panels display payload fields via the format helpers; no
// metric is computed on the client.

import {
  DEFAULT_BOX,
  diagonalPath,
  reliabilityPath,
  sweepAccuracyPath,
  sweepRejectPath,
  thresholdMarker,
} from './charts.js';
import { num, pct } from './format.js';
import type { RunController, ViewState } from './state.js';
import type { SetEvaluationDoc } from './types.js';

const METRIC_ROWS: Array<[string, keyof SetEvaluationDoc['classification']]> = [
  ['Precision', 'precision'],
  ['Specificity', 'specificity'],
  ['Sensitivity', 'sensitivity'],
  ['F1', 'f1'],
  ['Accuracy', 'accuracy'],
  ['AUC-ROC', 'auc_roc'],
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgChart(paths: Array<{ d: string; cls: string }>, markerX: number | null): SVGSVGElement {
  const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
  svg.setAttribute('viewBox', `0 0 ${DEFAULT_BOX.width} ${DEFAULT_BOX.height}`);
  svg.setAttribute('class', 'chart');
  for (const { d, cls } of paths) {
    if (!d) continue;
    const path = document.createElementNS('http://www.w3.org/2000/svg', 'path');
    path.setAttribute('d', d);
    path.setAttribute('class', cls);
    path.setAttribute('fill', 'none');
    svg.appendChild(path);
  }
  if (markerX !== null) {
    const marker = thresholdMarker(markerX);
    const line = document.createElementNS('http://www.w3.org/2000/svg', 'line');
    line.setAttribute('x1', String(marker.x));
    line.setAttribute('x2', String(marker.x));
    line.setAttribute('y1', String(marker.y1));
    line.setAttribute('y2', String(marker.y2));
    line.setAttribute('class', 'marker');
    svg.appendChild(line);
  }
  return svg;
}

function metricsTable(state: ViewState): HTMLElement {
  const table = el('table', 'metrics');
  const head = el('tr');
  for (const text of ['Metric', 'Before rejection', 'After rejection']) {
    head.appendChild(el('th', undefined, text));
  }
  table.appendChild(head);
  const doc = state.run.metrics;
  for (const [label, key] of METRIC_ROWS) {
    const row = el('tr');
    row.appendChild(el('td', undefined, label));
    row.appendChild(el('td', 'value', doc ? pct(doc.before.classification[key]) : '…'));
    row.appendChild(el('td', 'value', doc ? pct(doc.after.classification[key]) : '…'));
    table.appendChild(row);
  }
  for (const [label, key] of [
    ['ECE', 'ece'],
    ['Brier', 'brier'],
  ] as const) {
    const row = el('tr');
    row.appendChild(el('td', undefined, label));
    row.appendChild(el('td', 'value', doc?.before.calibration ? num(doc.before.calibration[key]) : '…'));
    row.appendChild(el('td', 'value', doc?.after.calibration ? num(doc.after.calibration[key]) : '…'));
    table.appendChild(row);
  }
  return table;
}

function operatingPointPanel(state: ViewState, controller: RunController): HTMLElement {
  const panel = el('section', 'panel');
  panel.appendChild(el('h2', undefined, 'Operating point'));

  const run = state.run;
  const sliderRow = el('div', 'slider-row');
  const slider = el('input') as HTMLInputElement;
  slider.type = 'range';
  slider.min = '0';
  slider.max = '1';
  slider.step = '0.01';
  slider.value = run.sliderThreshold === null ? '1' : String(run.sliderThreshold);
  slider.id = 'threshold-slider';
  slider.addEventListener('input', () => {
    void controller.onThresholdChange(Number(slider.value));
  });
  sliderRow.appendChild(el('label', undefined, 'Entropy threshold'));
  sliderRow.appendChild(slider);
  sliderRow.appendChild(
    el('span', 'value', run.sliderThreshold === null ? '' : num(run.sliderThreshold, 2)),
  );
  sliderRow.appendChild(
    el(
      'span',
      'hint',
      run.selectedThreshold === null ? '' : `stored: ${num(run.selectedThreshold, 2)}`,
    ),
  );
  panel.appendChild(sliderRow);

  const coverage = el('div', 'coverage');
  coverage.id = 'coverage';
  coverage.textContent = run.metrics ? `coverage ${pct(run.metrics.coverage)}` : '';
  panel.appendChild(coverage);

  if (run.whatIfNote) panel.appendChild(el('div', 'note', run.whatIfNote));
  panel.appendChild(metricsTable(state));

  if (run.sweep) {
    const charts = el('div', 'charts');
    charts.appendChild(
      svgChart(
        [
          { d: sweepAccuracyPath(run.sweep.points), cls: 'line-accuracy' },
          { d: sweepRejectPath(run.sweep.points), cls: 'line-reject' },
        ],
        run.sweep.selected_threshold,
      ),
    );
    if (run.reliability) {
      charts.appendChild(
        svgChart(
          [
            { d: diagonalPath(), cls: 'line-ideal' },
            { d: reliabilityPath(run.reliability.before), cls: 'line-reliability' },
          ],
          null,
        ),
      );
    }
    panel.appendChild(charts);
  }
  return panel;
}

function probabilityBars(probs: number[], classNames: string[]): HTMLElement {
  const wrap = el('div', 'prob-bars');
  probs.forEach((p, i) => {
    const row = el('div', 'prob-row');
    row.appendChild(el('span', 'prob-label', classNames[i] ?? `class ${i}`));
    const bar = el('div', 'prob-track');
    const fill = el('div', 'prob-fill');
    fill.style.width = pct(p);
    bar.appendChild(fill);
    row.appendChild(bar);
    row.appendChild(el('span', 'prob-value', pct(p)));
    wrap.appendChild(row);
  });
  return wrap;
}

function queuePanel(state: ViewState, controller: RunController, classNames: string[]): HTMLElement {
  const panel = el('section', 'panel');
  panel.appendChild(el('h2', undefined, 'Uncertain cases'));
  const counts = el('div', 'queue-counts');
  counts.id = 'queue-counts';
  counts.textContent = `reviewed ${state.queue.reviewedIds.length} · pending ${state.queue.pending.length}`;
  panel.appendChild(counts);

  const list = el('div', 'queue');
  for (const item of state.queue.pending) {
    const card = el('div', 'case');
    card.dataset.sampleId = item.sample_id;
    const head = el('div', 'case-head');
    head.appendChild(el('span', 'sample-id', item.sample_id));
    head.appendChild(el('span', 'entropy', `entropy ${num(item.entropy)}`));
    head.appendChild(el('span', 'predicted', `model: ${item.predicted_label}`));
    card.appendChild(head);
    card.appendChild(probabilityBars(item.probs, classNames));
    const verdicts = el('div', 'verdicts');
    for (const label of classNames) {
      const button = el('button', 'verdict', label);
      button.addEventListener('click', () => {
        button.disabled = true;
        void controller.submitVerdict(item.sample_id, label);
      });
      verdicts.appendChild(button);
    }
    card.appendChild(verdicts);
    list.appendChild(card);
  }
  panel.appendChild(list);

  const final = el('div', 'final-panel');
  final.id = 'final-panel';
  if (state.queue.final) {
    const doc = state.queue.final;
    final.appendChild(el('h3', undefined, 'Final (model + human verdicts)'));
    final.appendChild(el('div', 'coverage', `coverage ${pct(doc.coverage)}`));
    final.appendChild(
      el('div', undefined, `accuracy ${pct(doc.metrics.classification.accuracy)}`),
    );
    final.appendChild(
      el(
        'div',
        'hint',
        `n=${doc.counts.n} accepted=${doc.counts.accepted} reviewed=${doc.counts.reviewed}`,
      ),
    );
  }
  panel.appendChild(final);
  return panel;
}

export function render(
  root: HTMLElement,
  state: ViewState,
  controller: RunController,
  classNames: string[],
): void {
  root.replaceChildren();
  if (state.run.errorBanner) {
    root.appendChild(el('div', 'banner error', state.run.errorBanner));
  }
  if (state.run.status === 'loading') {
    root.appendChild(el('div', 'banner', 'loading run…'));
    return;
  }
  if (state.run.status !== 'ready') return;
  root.appendChild(operatingPointPanel(state, controller));
  root.appendChild(queuePanel(state, controller, classNames));
}
