/** Response shapes of the /api/v1 service. */

export interface RunDescriptor {
  run_id: string;
  status: string;
  grid_kind?: string;
  timesteps?: number[];
  error?: string | null;
}

export interface Summary {
  time: number;
  mean_temperature: number | null;
  mean_temperature_all: number | null;
  ice_count: number;
  total_mass: number;
  length: number;
  no_ice: boolean;
  length_2d?: number | null;
  length_3d?: number | null;
}

export interface ShapeRecord {
  time: number;
  alpha?: number;
  boundary?: [number, number][];
  characteristics?: { area: number; length: number; height: number; slope: number };
  removed_ids?: number[];
  no_shape?: string;
  component_count?: number;
}

export interface GroupRecord {
  time: number;
  eps: number;
  min_pts: number;
  noise_count: number;
  groups: {
    id: number;
    count: number;
    centroid: number[];
    mean_temperature: number;
    mass: number;
    length: number;
  }[];
}

export interface TrackingNode {
  id: string;
  column: number;
  row: number;
  time: number;
  group_id: number;
  count: number;
  mean_temperature: number;
  mass: number;
  length: number;
  radius_hint: number;
}

export interface TrackingEdge {
  from: string;
  to: string;
  weight: number;
  overlap_fraction: number;
  approximate?: boolean;
}

export interface TrackingGraph {
  nodes: TrackingNode[];
  edges: TrackingEdge[];
  events: { type: string; time: number; node_ids: string[] }[];
}

export interface EnsembleSchema {
  categorical: Record<string, string[]>;
  numeric_ranges: Record<string, [number, number]>;
  numeric_attributes: string[];
}

export interface GlyphGroups {
  groups: { run_ids: string[]; representative: Record<string, string> }[];
  diff_attributes: string[];
}

/** filaments: attribute -> run_id -> [time, value, relative_change][] */
export type FilamentSeries = Record<string, [number, number, number][]>;

export interface NeighborList {
  mode: string;
  k: number;
  run_id: string;
  neighbors: [string, number][];
}

export interface FilterSpec {
  categorical: Record<string, string>;
  numeric: Record<string, { lo?: number | null; hi?: number | null }>;
}

export interface GridHeader {
  attribute: string;
  dims: [number, number, number];
  bounds: [[number, number], [number, number], [number, number]];
  aggregation: string;
  kernel_sigma: number;
  value_range: [number, number];
  channels: string[];
  dtype: string;
  order: string;
}

export interface VolumeGrid {
  header: GridHeader;
  channels: Float32Array[];
}
