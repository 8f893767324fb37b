/** UI state machine.
 *
 * diagnosis: idle -> preview -> diagnosing -> diagnosed (or error -> preview).
 * The recommendation panel is only reachable from `diagnosed`; every
 * transition helper returns a new state object, so rendering stays a pure
 * function of the last state.
 */

import type { Prediction, Recommendation } from "./types.js";

export type DiagnosisPhase =
  | "idle"
  | "preview"
  | "diagnosing"
  | "diagnosed"
  | "error";

export type RecoPhase = "idle" | "loading" | "loaded" | "fallback" | "error";

export interface AppState {
  phase: DiagnosisPhase;
  previewUrl: string | null;
  prediction: Prediction | null;
  errorMessage: string | null;
  reco: {
    phase: RecoPhase;
    content: Recommendation | null;
    errorMessage: string | null;
  };
  /** monotonically increasing id; stale request results are dropped */
  requestId: number;
}

export function initialState(): AppState {
  return {
    phase: "idle",
    previewUrl: null,
    prediction: null,
    errorMessage: null,
    reco: { phase: "idle", content: null, errorMessage: null },
    requestId: 0,
  };
}

export function withPreview(state: AppState, previewUrl: string): AppState {
  return {
    ...initialState(),
    phase: "preview",
    previewUrl,
    requestId: state.requestId,
  };
}

export function startDiagnosis(state: AppState): AppState {
  if (state.phase !== "preview" && state.phase !== "error") {
    throw new Error(`cannot diagnose from phase ${state.phase}`);
  }
  return {
    ...state,
    phase: "diagnosing",
    prediction: null,
    errorMessage: null,
    reco: { phase: "idle", content: null, errorMessage: null },
    requestId: state.requestId + 1,
  };
}

export function finishDiagnosis(state: AppState, prediction: Prediction): AppState {
  return { ...state, phase: "diagnosed", prediction };
}

export function failDiagnosis(state: AppState, message: string): AppState {
  return { ...state, phase: "error", prediction: null, errorMessage: message };
}

export function canRequestRecommendation(state: AppState): boolean {
  return state.phase === "diagnosed" && state.prediction !== null;
}

export function startRecommendation(state: AppState): AppState {
  if (!canRequestRecommendation(state)) {
    throw new Error("recommendations require a completed diagnosis");
  }
  return {
    ...state,
    reco: { phase: "loading", content: null, errorMessage: null },
  };
}

export function finishRecommendation(
  state: AppState,
  content: Recommendation,
): AppState {
  return {
    ...state,
    reco: {
      phase: content.source === "local" ? "fallback" : "loaded",
      content,
      errorMessage: null,
    },
  };
}

export function failRecommendation(state: AppState, message: string): AppState {
  return {
    ...state,
    reco: { phase: "error", content: null, errorMessage: message },
  };
}
