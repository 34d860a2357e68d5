// DOM bootstrap: wires asset upload, the layer list, the curve editor,
// the scrubber, and sequence export to the session API.

import { SessionApi } from "./api.js";
import { CurveEditor } from "./editor.js";
import { PreviewScrubber } from "./scrubber.js";
import {
  addLayer,
  replaceSelectedCurve,
  selectLayer,
  selectedCurve,
  setScrub,
  toScript,
} from "./state.js";
import type { EditorState } from "./types.js";
import { initialState } from "./types.js";
import { validateScript } from "./validate.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const api = new SessionApi("");
let state: EditorState = initialState();
let scriptDirty = true;

const banner = $("banner");
const layerList = $("layer-list");
const previewImg = $<HTMLImageElement>("preview");
const scrubInput = $<HTMLInputElement>("scrub");
const exportLinks = $("export-links");

const showError = (message: string): void => {
  banner.textContent = message;
  banner.style.display = message ? "block" : "none";
};

const editor = new CurveEditor(
  $<HTMLCanvasElement>("curve-canvas"),
  selectedCurve(state),
);

const scrubber = new PreviewScrubber(api);
scrubber.onFrame = (url) => {
  previewImg.src = url;
  showError("");
};
scrubber.onError = showError;

function renderLayerList(): void {
  layerList.innerHTML = "";
  const backgroundItem = document.createElement("li");
  backgroundItem.textContent = "background";
  backgroundItem.className = state.selectedLayer === null ? "selected" : "";
  backgroundItem.onclick = () => {
    state = selectLayer(state, null);
    editor.setCurve(selectedCurve(state));
    renderLayerList();
  };
  layerList.appendChild(backgroundItem);
  state.layers.forEach((layer, i) => {
    const item = document.createElement("li");
    item.textContent = layer.maskName;
    item.className = state.selectedLayer === i ? "selected" : "";
    item.onclick = () => {
      state = selectLayer(state, i);
      editor.setCurve(selectedCurve(state));
      renderLayerList();
    };
    layerList.appendChild(item);
  });
}

async function syncScriptAndPreview(): Promise<void> {
  if (!state.sessionId) return;
  const script = toScript(state);
  const errors = validateScript(script);
  if (errors.length > 0) {
    showError(errors.join("; "));
    return;
  }
  if (scriptDirty) {
    try {
      await api.putScript(state.sessionId, script);
      scriptDirty = false;
    } catch (err) {
      showError(err instanceof Error ? err.message : String(err));
      return;
    }
  }
  scrubber.scrub(state.sessionId, state.scrubT, state.iters, JSON.stringify(script));
}

editor.onChange = (curve) => {
  state = replaceSelectedCurve(state, curve);
  scriptDirty = true;
  void syncScriptAndPreview();
};

scrubInput.addEventListener("input", () => {
  state = setScrub(state, Number(scrubInput.value));
  void syncScriptAndPreview();
});

$("connect").addEventListener("click", () => {
  void (async () => {
    try {
      const sessionId = await api.createSession();
      state = { ...state, sessionId };
      showError("");
      $("session-label").textContent = `session ${sessionId.slice(0, 8)}`;
    } catch (err) {
      showError(err instanceof Error ? err.message : String(err));
    }
  })();
});

$<HTMLInputElement>("asset-file").addEventListener("change", (ev) => {
  const input = ev.target as HTMLInputElement;
  const file = input.files?.[0];
  if (!file || !state.sessionId) return;
  void (async () => {
    try {
      await api.uploadAsset(state.sessionId!, file.name, file);
      state = { ...state, assets: [...state.assets, file.name] };
      const isEngineAsset = ["i0.png", "i1.png", "v01.flo", "v10.flo"].includes(file.name);
      if (file.name.endsWith(".png") && !isEngineAsset) {
        state = addLayer(state, file.name);
        scriptDirty = true;
        editor.setCurve(selectedCurve(state));
      }
      renderLayerList();
      void syncScriptAndPreview();
    } catch (err) {
      showError(err instanceof Error ? err.message : String(err));
    }
  })();
});

$("export").addEventListener("click", () => {
  if (!state.sessionId) return;
  const stepsInput = $<HTMLInputElement>("export-steps");
  const n = Number(stepsInput.value) || 9;
  const timesteps = Array.from({ length: n }, (_, i) => i / (n - 1));
  exportLinks.textContent = "rendering...";
  void (async () => {
    try {
      const urls = await api.render(state.sessionId!, timesteps, state.iters);
      exportLinks.innerHTML = "";
      urls.forEach((url, i) => {
        const a = document.createElement("a");
        a.href = url;
        a.textContent = `frame ${i}`;
        a.download = `frame_${String(i).padStart(4, "0")}.png`;
        exportLinks.appendChild(a);
        exportLinks.appendChild(document.createTextNode(" "));
      });
    } catch (err) {
      exportLinks.textContent = "";
      showError(err instanceof Error ? err.message : String(err));
    }
  })();
});

renderLayerList();
