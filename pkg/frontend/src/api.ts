/** Typed client for the pocolabel HTTP API; the UI's only data source. */

import type {
  Annotation,
  DatasetInfo,
  ImageInfo,
  LayerPayload,
  UserInfo,
  UserStats,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly base: string,
    options: { fetchFn?: FetchLike; token?: string } = {},
  ) {
    // bind the global fetch so it works detached from globalThis
    this.fetchFn = options.fetchFn ?? ((url, init) => fetch(url, init));
    this.token = options.token;
  }

  readonly token: string | undefined;

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchFn(`${this.base}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const code = payload?.error ?? "http_error";
      const message = payload?.message ?? `${method} ${path} -> ${response.status}`;
      throw new ApiError(response.status, code, message);
    }
    return payload as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  listDatasets(): Promise<DatasetInfo[]> {
    return this.request("GET", "/datasets");
  }

  createDataset(body: {
    name: string;
    categories: { name: string; type?: string }[];
  }): Promise<DatasetInfo> {
    return this.request("POST", "/datasets", body);
  }

  images(dataset: string, user?: number): Promise<ImageInfo[]> {
    const query = user === undefined ? "" : `?user=${user}`;
    return this.request("GET", `/datasets/${dataset}/images${query}`);
  }

  scan(dataset: string): Promise<{ added: ImageInfo[]; count: number }> {
    return this.request("POST", `/datasets/${dataset}/scan`);
  }

  generate(
    dataset: string,
    body: { keyword: string; count: number; provider?: string },
  ): Promise<{ added: ImageInfo[]; count: number }> {
    return this.request("POST", `/datasets/${dataset}/generate`, body);
  }

  listUsers(): Promise<UserInfo[]> {
    return this.request("GET", "/users");
  }

  createUser(body: {
    username: string;
    role?: string;
    clone_from?: number;
  }): Promise<UserInfo> {
    return this.request("POST", "/users", body);
  }

  stats(userId: number): Promise<UserStats> {
    return this.request("GET", `/users/${userId}/stats`);
  }

  layer(imageId: number, userId: number): Promise<LayerPayload> {
    return this.request("GET", `/images/${imageId}/layers/${userId}/annotations`);
  }

  createAnnotation(
    imageId: number,
    userId: number,
    body: Partial<Annotation>,
  ): Promise<Annotation> {
    return this.request("POST", `/images/${imageId}/layers/${userId}/annotations`, body);
  }

  patchAnnotation(
    imageId: number,
    userId: number,
    annotationId: number,
    body: Partial<Annotation>,
  ): Promise<Annotation> {
    return this.request(
      "PATCH",
      `/images/${imageId}/layers/${userId}/annotations/${annotationId}`,
      body,
    );
  }

  deleteAnnotation(
    imageId: number,
    userId: number,
    annotationId: number,
  ): Promise<{ deleted: number }> {
    return this.request(
      "DELETE",
      `/images/${imageId}/layers/${userId}/annotations/${annotationId}`,
    );
  }

  applyTool(
    imageId: number,
    userId: number,
    body: Record<string, unknown>,
  ): Promise<Annotation> {
    return this.request("POST", `/images/${imageId}/layers/${userId}/tool`, body);
  }

  undo(imageId: number, userId: number): Promise<LayerPayload> {
    return this.request("POST", `/images/${imageId}/layers/${userId}/undo`);
  }

  closeImage(imageId: number, userId: number): Promise<{ closed: boolean }> {
    return this.request("POST", `/images/${imageId}/layers/${userId}/close`);
  }

  autoAnnotate(imageId: number, userId: number): Promise<{ created: Annotation[] }> {
    return this.request("POST", `/images/${imageId}/auto-annotate`, {
      user_id: userId,
    });
  }

  imageFileUrl(imageId: number): string {
    return `${this.base}/images/${imageId}/file`;
  }
}
