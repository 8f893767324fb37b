/** JSON contracts of the diagnosis service. */

export interface ClassConfidence {
  class: string;
  confidence: number;
}

export interface Prediction {
  top1: ClassConfidence;
  top5: ClassConfidence[];
  /** base64 PNG overlay */
  gradcam: string;
  latency_ms: number;
}

export interface Recommendation {
  disease: string;
  sections: {
    cause: string;
    immediate_steps: string;
    long_term_control: string;
  };
  source: "local" | "remote";
}

export interface ServiceError {
  code: string;
  message: string;
}
