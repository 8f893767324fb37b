/** Browser entry point: wires file input, state machine, and renderers. */

import { ApiClient, ApiError, MAX_UPLOAD_BYTES } from "./api.js";
import { renderApp } from "./render.js";
import {
  AppState,
  failDiagnosis,
  failRecommendation,
  finishDiagnosis,
  finishRecommendation,
  initialState,
  startDiagnosis,
  startRecommendation,
  withPreview,
} from "./state.js";

const SUPPORTED_TYPES = ["image/jpeg", "image/png"];

const api = new ApiClient((input, init) => fetch(input, init));

let state: AppState = initialState();
let pendingBlob: Blob | null = null;

const root = document.getElementById("root") as HTMLElement;
const input = document.getElementById("file-input") as HTMLInputElement;
const inlineMessage = document.getElementById("inline-message") as HTMLElement;

function paint(): void {
  root.innerHTML = renderApp(state);
}

function setState(next: AppState): void {
  state = next;
  paint();
}

async function diagnose(): Promise<void> {
  if (!pendingBlob) return;
  const next = startDiagnosis(state);
  const requestId = next.requestId;
  setState(next);
  try {
    const prediction = await api.predict(pendingBlob);
    if (state.requestId !== requestId) return; // superseded by a newer upload
    setState(finishDiagnosis(state, prediction));
  } catch (err) {
    if (state.requestId !== requestId) return;
    const message =
      err instanceof ApiError ? err.message : "service unreachable; try again";
    setState(failDiagnosis(state, message));
  }
}

async function fetchRecommendation(): Promise<void> {
  const disease = state.prediction?.top1.class;
  if (!disease) return;
  setState(startRecommendation(state));
  try {
    const reco = await api.recommend(disease);
    setState(finishRecommendation(state, reco));
  } catch (err) {
    const message =
      err instanceof ApiError ? err.message : "recommendation service unreachable";
    setState(failRecommendation(state, message));
  }
}

input.addEventListener("change", () => {
  const file = input.files?.[0];
  inlineMessage.textContent = "";
  if (!file) return;
  if (!SUPPORTED_TYPES.includes(file.type)) {
    inlineMessage.textContent = "Unsupported file type; use JPEG or PNG.";
    return;
  }
  if (file.size > MAX_UPLOAD_BYTES) {
    inlineMessage.textContent = "File exceeds the 10 MB upload limit.";
    return;
  }
  if (state.previewUrl) URL.revokeObjectURL(state.previewUrl);
  pendingBlob = file;
  setState(withPreview(state, URL.createObjectURL(file)));
  void diagnose();
});

root.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const action = target.dataset?.action;
  if (action === "recommend") void fetchRecommendation();
  if (action === "retry") void diagnose();
});

paint();
