// DOM wiring for the tuner page.

import {
  fetchMetrics,
  fetchOverlay,
  fetchSession,
  frameUrl,
  postParams,
} from './api.js'
import { rateLimiter } from './debounce.js'
import { canvasSurface, renderOverlay } from './render.js'
import {
  acceptMetrics,
  acceptOverlay,
  clampFrame,
  clearError,
  formatF1,
  formatMetricsLine,
  initialState,
  issueRequest,
  setError,
  setSlider,
  type UiState,
} from './state.js'
import type { BodyPart } from './types.js'

const BASE = ''
const REQUEST_INTERVAL_MS = 100 // <= 10 requests/s while dragging

let state: UiState = initialState()
let hasFrameImages = false
let hasGroundtruth = false

const el = {
  canvas: document.getElementById('view') as HTMLCanvasElement,
  frameImage: document.getElementById('frame-image') as HTMLImageElement,
  rhoH: document.getElementById('rho-h') as HTMLInputElement,
  rhoV: document.getElementById('rho-v') as HTMLInputElement,
  rhoHValue: document.getElementById('rho-h-value') as HTMLSpanElement,
  rhoVValue: document.getElementById('rho-v-value') as HTMLSpanElement,
  frame: document.getElementById('frame') as HTMLInputElement,
  frameValue: document.getElementById('frame-value') as HTMLSpanElement,
  part: document.getElementById('part') as HTMLSelectElement,
  save: document.getElementById('save') as HTMLButtonElement,
  f1: document.getElementById('f1') as HTMLSpanElement,
  metricsLine: document.getElementById('metrics-line') as HTMLSpanElement,
  banner: document.getElementById('banner') as HTMLDivElement,
  saveCount: document.getElementById('save-count') as HTMLSpanElement,
}

const limiter = rateLimiter(REQUEST_INTERVAL_MS)

function showBanner(message: string | null): void {
  el.banner.textContent = message ?? ''
  el.banner.style.display = message ? 'block' : 'none'
}

function redraw(): void {
  const ctx = el.canvas.getContext('2d')
  if (ctx === null || state.overlay === null) return
  const surface = canvasSurface(ctx, el.canvas.width, el.canvas.height)
  try {
    renderOverlay(surface, state.overlay, { drawSkeletons: !hasFrameImages })
    showBanner(state.error)
  } catch (err) {
    showBanner(String(err))
  }
}

function updateReadouts(): void {
  el.rhoHValue.textContent = state.rhoH.toFixed(2)
  el.rhoVValue.textContent = state.rhoV.toFixed(2)
  el.frameValue.textContent = String(state.frameIndex)
  el.f1.textContent = formatF1(state.metrics)
  el.metricsLine.textContent = formatMetricsLine(state.metrics)
}

function refresh(): void {
  limiter.schedule(() => {
    const issued = issueRequest(state)
    state = issued.state
    const seq = issued.seq
    const query = {
      frame: state.frameIndex,
      rhoH: state.rhoH,
      rhoV: state.rhoV,
      part: state.part,
    }
    fetchOverlay(BASE, query)
      .then((payload) => {
        state = acceptOverlay(state, seq, payload)
        redraw()
      })
      .catch((err) => {
        state = setError(state, `overlay request failed: ${err}`)
        showBanner(state.error)
      })
    if (hasGroundtruth) {
      fetchMetrics(BASE, query)
        .then((payload) => {
          state = acceptMetrics(state, seq, payload)
          updateReadouts()
        })
        .catch(() => {
          // metrics are advisory; keep the sliders responsive
        })
    }
    if (hasFrameImages) {
      el.frameImage.src = frameUrl(BASE, state.frameIndex)
    }
  })
}

function onSlider(which: 'rhoH' | 'rhoV', raw: string): void {
  state = clearError(setSlider(state, which, Number(raw)))
  updateReadouts()
  refresh()
}

async function onSave(): Promise<void> {
  try {
    const session = await postParams(BASE, state.rhoH, state.rhoV, state.part)
    el.saveCount.textContent = String(session.log_length)
    showBanner(null)
  } catch (err) {
    showBanner(`save failed: ${err}`)
  }
}

async function boot(): Promise<void> {
  try {
    const session = await fetchSession(BASE)
    hasFrameImages = session.has_frames
    hasGroundtruth = session.has_groundtruth
    state = {
      ...state,
      nFrames: session.n_frames,
      rhoH: session.rho_h,
      rhoV: session.rho_v,
      part: session.part as BodyPart,
    }
    el.canvas.width = session.image_size[0]
    el.canvas.height = session.image_size[1]
    el.frame.max = String(Math.max(0, session.n_frames - 1))
    el.rhoH.value = String(state.rhoH)
    el.rhoV.value = String(state.rhoV)
    el.part.value = state.part
    el.saveCount.textContent = String(session.log_length)
    el.frameImage.style.display = hasFrameImages ? 'block' : 'none'
    updateReadouts()
    refresh()
  } catch (err) {
    showBanner(`could not reach the session endpoint: ${err}`)
  }
}

el.rhoH.addEventListener('input', () => onSlider('rhoH', el.rhoH.value))
el.rhoV.addEventListener('input', () => onSlider('rhoV', el.rhoV.value))
el.frame.addEventListener('input', () => {
  state = { ...state, frameIndex: clampFrame(Number(el.frame.value), state.nFrames) }
  updateReadouts()
  refresh()
})
el.part.addEventListener('change', () => {
  state = { ...state, part: el.part.value as BodyPart }
  refresh()
})
el.save.addEventListener('click', () => {
  void onSave()
})

void boot()
