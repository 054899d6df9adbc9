import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.spec.ts'],
    // diffusion training in the acceptance spec needs real time on CPU
    testTimeout: 120_000,
    hookTimeout: 2_400_000,
    pool: 'forks',
    maxWorkers: 1,
    minWorkers: 1,
    fileParallelism: false,
  },
});
