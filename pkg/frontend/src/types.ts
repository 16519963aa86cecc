/** Payload shapes exchanged with the pocolabel HTTP API. */

export interface RleSegmentation {
  counts: number[];
  size: [number, number]; // [height, width]
}

export type Segmentation = number[][] | RleSegmentation;

export interface PocoExt {
  maturity_stage?: string;
  plant_id?: number;
  keypoint_names?: string[];
  skeleton?: [number, number][];
  [extra: string]: unknown;
}

export interface Annotation {
  id: number;
  image_id: number;
  category_id: number;
  segmentation?: Segmentation;
  bbox?: [number, number, number, number];
  area?: number;
  iscrowd?: number;
  keypoints?: number[]; // [x1, y1, v1, ...]
  num_keypoints?: number;
  poco?: PocoExt;
  [extra: string]: unknown;
}

export interface LayerPayload {
  user_id: number;
  image_id: number;
  revision: number;
  annotations: Annotation[];
}

export interface CategoryInfo {
  id: number;
  name: string;
  supercategory?: string;
  poco?: { type?: string; [extra: string]: unknown };
}

export interface DatasetInfo {
  name: string;
  categories: CategoryInfo[];
  metadata_schema: [string, string][];
}

export interface ImageInfo {
  id: number;
  file_name: string;
  width: number;
  height: number;
  poco?: Record<string, unknown>;
  annotation_count?: number;
}

export interface UserInfo {
  id: number;
  username: string;
  role: "superuser" | "annotator";
  clone_from: number | null;
}

export interface UserStats {
  images_annotated: number;
  mean_annotation_area: number;
  mean_seconds_per_annotation: number;
  mean_seconds_per_image: number;
}

export interface Point {
  x: number;
  y: number;
}

export function isRle(seg: Segmentation | undefined): seg is RleSegmentation {
  return !!seg && !Array.isArray(seg);
}
