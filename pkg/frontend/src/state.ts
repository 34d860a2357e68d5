// Pure EditorState transitions; the DOM layer only dispatches these.

import type { CurveSpec, EditorState, ScriptSpec } from "./types.js";
import { identityCurve } from "./types.js";

export function addLayer(state: EditorState, maskName: string): EditorState {
  return {
    ...state,
    layers: [...state.layers, { maskName, curve: identityCurve(), visible: true }],
    selectedLayer: state.layers.length,
  };
}

export function removeLayer(state: EditorState, index: number): EditorState {
  const layers = state.layers.filter((_, i) => i !== index);
  let selected = state.selectedLayer;
  if (selected !== null) {
    if (selected === index) selected = null;
    else if (selected > index) selected -= 1;
  }
  return { ...state, layers, selectedLayer: selected };
}

export function selectLayer(state: EditorState, index: number | null): EditorState {
  return { ...state, selectedLayer: index };
}

export function selectedCurve(state: EditorState): CurveSpec {
  if (state.selectedLayer === null) return state.background;
  const layer = state.layers[state.selectedLayer];
  return layer ? layer.curve : state.background;
}

export function replaceSelectedCurve(state: EditorState, curve: CurveSpec): EditorState {
  if (state.selectedLayer === null) {
    return { ...state, background: curve };
  }
  const layers = state.layers.map((layer, i) =>
    i === state.selectedLayer ? { ...layer, curve } : layer,
  );
  return { ...state, layers };
}

export function setScrub(state: EditorState, t: number): EditorState {
  return { ...state, scrubT: Math.min(Math.max(t, 0), 1) };
}

/** The script JSON the editor submits; exactly what compose_maps and
 * the service consume. */
export function toScript(state: EditorState): ScriptSpec {
  return {
    layers: state.layers
      .filter((layer) => layer.visible)
      .map((layer) => ({ mask: layer.maskName, curve: layer.curve })),
    background: state.background,
    overlap: state.overlap,
  };
}
