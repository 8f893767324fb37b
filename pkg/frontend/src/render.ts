/** Pure HTML-string renderers; no DOM access, snapshot-testable. */

import type { AppState } from "./state.js";
import { canRequestRecommendation } from "./state.js";
import type { ClassConfidence, Recommendation } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** 0.9802 -> "98.0%" (one decimal place). */
export function formatConfidence(value: number): string {
  return `${(value * 100).toFixed(1)}%`;
}

export function renderConfidenceBars(top5: ClassConfidence[]): string {
  const bars = top5.map((entry, i) => {
    const width = Math.max(0, Math.min(100, entry.confidence * 100));
    return (
      `<li class="bar" data-rank="${i + 1}" data-class="${escapeHtml(entry.class)}">` +
      `<span class="bar-label">${escapeHtml(entry.class)}</span>` +
      `<span class="bar-track"><span class="bar-fill" style="width:${width.toFixed(1)}%"></span></span>` +
      `<span class="bar-value">${formatConfidence(entry.confidence)}</span>` +
      `</li>`
    );
  });
  return `<ol class="confidence-bars">${bars.join("")}</ol>`;
}

export function renderHeadline(top1: ClassConfidence, latencyMs: number): string {
  return (
    `<header class="headline">` +
    `<h2>${escapeHtml(top1.class)}</h2>` +
    `<p>${formatConfidence(top1.confidence)} confidence &middot; ${latencyMs.toFixed(0)} ms</p>` +
    `</header>`
  );
}

export function renderOverlay(previewUrl: string | null, gradcamB64: string): string {
  const original = previewUrl
    ? `<img class="original" src="${escapeHtml(previewUrl)}" alt="uploaded leaf">`
    : "";
  return (
    `<div class="overlay-toggle">${original}` +
    `<img class="heatmap" src="data:image/png;base64,${gradcamB64}" alt="activation heatmap">` +
    `</div>`
  );
}

export function renderErrorBanner(message: string): string {
  return (
    `<div class="banner error" role="alert">${escapeHtml(message)}` +
    `<button data-action="retry">Retry</button></div>`
  );
}

export function renderRecommendationPanel(state: AppState): string {
  const reachable = canRequestRecommendation(state) || state.reco.phase !== "idle";
  if (!reachable) {
    return `<section class="reco unreachable" hidden></section>`;
  }
  const { phase, content, errorMessage } = state.reco;
  if (phase === "idle") {
    return (
      `<section class="reco">` +
      `<button data-action="recommend">Recommendations</button></section>`
    );
  }
  if (phase === "loading") {
    return `<section class="reco"><p class="loading">Fetching advice&hellip;</p></section>`;
  }
  if (phase === "error") {
    return `<section class="reco">${renderErrorBanner(errorMessage ?? "recommendation failed")}</section>`;
  }
  const reco = content as Recommendation;
  const badge =
    phase === "fallback"
      ? `<span class="badge fallback" title="answered from the built-in knowledge base">source: local</span>`
      : "";
  return (
    `<section class="reco loaded">` +
    `<h3>${escapeHtml(reco.disease)}${badge}</h3>` +
    `<dl>` +
    `<dt>Cause</dt><dd>${escapeHtml(reco.sections.cause)}</dd>` +
    `<dt>Immediate steps</dt><dd>${escapeHtml(reco.sections.immediate_steps)}</dd>` +
    `<dt>Long-term control</dt><dd>${escapeHtml(reco.sections.long_term_control)}</dd>` +
    `</dl></section>`
  );
}

export function renderApp(state: AppState): string {
  const parts: string[] = [];
  if (state.phase === "idle") {
    parts.push(`<p class="hint">Upload or capture a sugarcane leaf image to begin.</p>`);
  }
  if (state.previewUrl && state.phase !== "diagnosed") {
    parts.push(`<img class="preview" src="${escapeHtml(state.previewUrl)}" alt="preview">`);
  }
  if (state.phase === "diagnosing") {
    parts.push(`<p class="loading">Diagnosing&hellip;</p>`);
  }
  if (state.phase === "error" && state.errorMessage) {
    parts.push(renderErrorBanner(state.errorMessage));
  }
  if (state.phase === "diagnosed" && state.prediction) {
    parts.push(renderHeadline(state.prediction.top1, state.prediction.latency_ms));
    parts.push(renderOverlay(state.previewUrl, state.prediction.gradcam));
    parts.push(renderConfidenceBars(state.prediction.top5));
  }
  parts.push(renderRecommendationPanel(state));
  return `<main class="app phase-${state.phase}">${parts.join("")}</main>`;
}
