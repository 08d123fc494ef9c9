/** Shapes of the JSON exchanged with the annotation service. */

export interface LabelInfo {
  id: number;
  name: string;
}

export interface BatchItem {
  post_id: string;
  text: string;
  round: number;
}

export interface GuidelineEntry {
  label: number;
  title: string;
  lead: string;
  elaboration: string[];
  examples: string[];
}

export interface ProgressInfo {
  annotator_id: string;
  assigned: number;
  answered: number;
  remaining: number;
}

/** One answer on its way to POST /api/annotations. */
export interface Submission {
  annotator: string;
  post_id: string;
  labels: number[];
  round: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}
