import * as tf from '@tensorflow/tfjs';
import '@tensorflow/tfjs-backend-wasm';

let ready: Promise<string> | null = null;

/**
 * The wasm backend ships Conv2D and Conv2DBackpropInput kernels but not
 * Conv2DBackpropFilter, so conv layers cannot train on it as-is. The filter
 * gradient is expressible with kernels wasm does have:
 *
 *   dW[ky,kx,ci,co] = sum_{b,r,c} xPad[b, s r + ky, s c + kx, ci] dy[b,r,c,co]
 *
 * which is a valid-pad conv of the padded input (batch and channel axes
 * swapped) with dy as the filter, dilated by the forward stride.
 */
function filterGradViaConv(
  x: tf.Tensor4D,
  dy: tf.Tensor4D,
  filterShape: [number, number, number, number],
  strides: number | [number, number],
  pad: 'valid' | 'same' | number,
): tf.Tensor4D {
  const s = Array.isArray(strides) ? strides[0] : strides;
  const info = tf.backend_util.computeConv2DInfo(
    x.shape as [number, number, number, number],
    filterShape,
    strides,
    1,
    pad,
  );
  const { top, bottom, left, right } = info.padInfo;
  return tf.tidy(() => {
    const xPad = tf.pad(x, [[0, 0], [top, bottom], [left, right], [0, 0]]);
    const byChannel = tf.transpose(xPad, [3, 1, 2, 0]) as tf.Tensor4D;
    const dyAsFilter = tf.transpose(dy, [1, 2, 0, 3]) as tf.Tensor4D;
    const grad = tf.conv2d(byChannel, dyAsFilter, 1, 'valid', 'NHWC', s);
    return tf.transpose(grad, [1, 2, 0, 3]) as tf.Tensor4D;
  });
}

function patchConv2DGradient(): void {
  tf.unregisterGradient('Conv2D');
  tf.registerGradient({
    kernelName: 'Conv2D',
    inputsToSave: ['x', 'filter'],
    gradFunc: (dy, saved, attrs) => {
      const [x, filter] = saved as [tf.Tensor4D, tf.Tensor4D];
      const { strides, pad, dataFormat, dilations } = attrs as unknown as {
        strides: number | [number, number];
        pad: 'valid' | 'same' | number;
        dataFormat: string;
        dilations: number | [number, number];
      };
      const d = Array.isArray(dilations) ? dilations[0] : dilations;
      if (dataFormat !== 'NHWC' || d !== 1) {
        throw new Error(`conv gradient patch supports NHWC with dilation 1, got ${dataFormat}/${dilations}`);
      }
      return {
        x: () =>
          tf.conv2dTranspose(
            dy as tf.Tensor4D,
            filter,
            x.shape as [number, number, number, number],
            strides,
            pad,
          ),
        filter: () =>
          filterGradViaConv(
            x,
            dy as tf.Tensor4D,
            filter.shape as [number, number, number, number],
            strides,
            pad,
          ),
      };
    },
  });
}

/**
 * Select the fastest available backend. The wasm kernels are roughly 40x
 * the pure-JS ones on this workload; fall back to cpu when wasm fails to
 * initialize (missing binary, unsupported platform).
 */
export function setupBackend(prefer = 'wasm'): Promise<string> {
  if (!ready) {
    ready = (async () => {
      let name: string;
      if (prefer !== 'cpu') {
        try {
          const ok = await tf.setBackend(prefer);
          if (ok) {
            await tf.ready();
            name = tf.getBackend();
          } else {
            name = '';
          }
        } catch {
          name = '';
        }
      } else {
        name = '';
      }
      if (name === '') {
        await tf.setBackend('cpu');
        await tf.ready();
        name = tf.getBackend();
      }
      const kernels = new Set(tf.getKernelsForBackend(name).map((k) => k.kernelName));
      if (!kernels.has('Conv2DBackpropFilter')) patchConv2DGradient();
      return name;
    })();
  }
  return ready;
}
