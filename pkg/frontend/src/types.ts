// JSON payloads exchanged with the tuning service.

export interface OverlayPerson {
  person_index: number
  valid: boolean
  violating: boolean
  ground_point: [number, number] | null
  ellipse: [number, number][] | null
  keypoints: [number, number, number][]
}

export interface OverlayPair {
  a: number
  b: number
  est_distance_m: number
  violation: boolean
}

export interface OverlayResponse {
  frame_id: number
  people: OverlayPerson[]
  pairs: OverlayPair[]
}

export interface MetricsResponse {
  rho_h: number
  rho_v: number
  part: string
  precision: number
  recall: number
  f1: number
  tp: number
  fp: number
  fn: number
}

export interface SessionState {
  version: string
  n_frames: number
  frame_ids: number[]
  image_size: [number, number]
  rho_h: number
  rho_v: number
  part: string
  radius_m: number
  threshold_m: number
  has_groundtruth: boolean
  has_frames: boolean
  homography: number[]
  log_length: number
}

export type BodyPart = 'torso' | 'leg' | 'arm' | 'bbox'
