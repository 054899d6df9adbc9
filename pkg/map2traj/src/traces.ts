/**
 * Trace CSV interchange with the network simulator: header
 * `traj_id,t_s,x_m,y_m`, rows grouped by trajectory, floats with 6 decimals.
 */

import * as fs from 'node:fs';

import type { Trajectory } from './types.js';

export const TRACE_HEADER = 'traj_id,t_s,x_m,y_m';

export function formatTraces(trajectories: Trajectory[]): string {
  const lines = [TRACE_HEADER];
  trajectories.forEach((traj, tid) => {
    for (let i = 0; i < traj.t.length; i++) {
      lines.push(`${tid},${traj.t[i].toFixed(6)},${traj.xy[i][0].toFixed(6)},${traj.xy[i][1].toFixed(6)}`);
    }
  });
  return lines.join('\n') + '\n';
}

export function exportTraces(trajectories: Trajectory[], file: string): void {
  fs.writeFileSync(file, formatTraces(trajectories));
}

export function parseTraces(text: string): Trajectory[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines[0] !== TRACE_HEADER) throw new Error(`expected header ${TRACE_HEADER}`);
  const byId = new Map<number, Trajectory>();
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(',');
    if (parts.length !== 4) throw new Error(`line ${i + 1}: expected 4 fields`);
    const tid = Number(parts[0]);
    const t = Number(parts[1]);
    const x = Number(parts[2]);
    const y = Number(parts[3]);
    if (![tid, t, x, y].every(Number.isFinite)) throw new Error(`line ${i + 1}: bad number`);
    let traj = byId.get(tid);
    if (!traj) {
      traj = { t: [], xy: [] };
      byId.set(tid, traj);
    }
    traj.t.push(t);
    traj.xy.push([x, y]);
  }
  return [...byId.values()];
}

export function loadTraces(file: string): Trajectory[] {
  return parseTraces(fs.readFileSync(file, 'utf-8'));
}
