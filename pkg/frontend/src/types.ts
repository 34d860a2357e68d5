// Script and editor types shared across the re-timing editor.
// The JSON shapes mirror the service's retime-script schema exactly.

export type CurveKind = "linear" | "piecewise_linear" | "cubic_bezier";

export type ControlPoint = [t: number, d: number];

export interface CurveSpec {
  kind: CurveKind;
  points: ControlPoint[];
}

export interface LayerSpec {
  mask: string;
  curve: CurveSpec;
}

export interface ScriptSpec {
  layers?: LayerSpec[];
  background?: CurveSpec;
  overlap?: "last_wins" | "priority";
  feather?: boolean;
}

export interface EditorLayer {
  maskName: string;
  curve: CurveSpec;
  visible: boolean;
}

export interface EditorState {
  sessionId: string | null;
  assets: string[];
  layers: EditorLayer[];
  background: CurveSpec;
  overlap: "last_wins" | "priority";
  selectedLayer: number | null; // null selects the background curve
  scrubT: number;
  // hash of the (script, t, iters) the shown preview corresponds to
  previewHash: string | null;
  previewUrl: string | null;
  iters: number;
}

export const identityCurve = (): CurveSpec => ({
  kind: "linear",
  points: [
    [0, 0],
    [1, 1],
  ],
});

export const initialState = (): EditorState => ({
  sessionId: null,
  assets: [],
  layers: [],
  background: identityCurve(),
  overlap: "last_wins",
  selectedLayer: null,
  scrubT: 0,
  previewHash: null,
  previewUrl: null,
  iters: 1,
});
