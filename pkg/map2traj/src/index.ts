export { Rng } from './rng.js';
export {
  makeSchedule,
  gammaAt,
  alphaAt,
  forwardMarginal,
  posteriorCoefficients,
  posteriorParams,
  type NoiseSchedule,
} from './schedule.js';
export { encodeGrayPng, decodeGrayPng } from './png.js';
export {
  loadStreetGraph,
  rasterizeGraph,
  rasterizeTrajectory,
  unionMask,
  upsample,
  downsampleMax,
  loadMapRaster,
  ROAD_CLASS_COUNT,
  type StreetGraph,
} from './raster.js';
export { augment, drawAugment, applyTransform, type AugmentDraw } from './augment.js';
export { imageToSequence, tracePixels, activePixels, ACTIVE_THRESHOLD } from './sequence.js';
export { exportTraces, loadTraces, formatTraces, parseTraces, TRACE_HEADER } from './traces.js';
export { edr, minMatchEdr, EDR_MATCH_RADIUS } from './metrics.js';
export { Denoiser, DESK_PRESET, FULL_PRESET, type DenoiserPreset, type WeightEntry } from './unet.js';
export {
  diffusionLoss,
  trainingStep,
  denoiseStep,
  denoiseStepBatch,
  sample,
  blankMap,
  stackMaps,
  BINARY_THRESHOLD,
  type DenoiserLike,
  type TrainBatch,
} from './diffusion.js';
export {
  saveCheckpoint,
  loadCheckpoint,
  presetByName,
  defaultScheduleSpec,
  type Checkpoint,
  type ScheduleSpec,
} from './checkpoint.js';
export { setupBackend } from './backend.js';
export { loadCorpus, buildMapEntry, graphBBox, resolvePathList, type Corpus, type MapEntry } from './dataset.js';
export { trainModel, type TrainOptions, type TrainLogEntry } from './train.js';
export type { BBox, GridImage, MapImage, Trajectory, SpeedModel } from './types.js';
