/** Typed client for the inference service. All generation happens
 * server-side; this module only shapes requests and surfaces errors. */

export interface SchemaDoc {
  attributes: string[];
  attribute_count: number;
  style_dim: number;
  image_size: number;
  with_sketch: boolean;
  model_id: string;
}

export type AttributeValue = -1 | 1;
export type AttributeSettings = Record<string, AttributeValue>;

export interface SynthesizeRequest {
  sketch: string; // base64 PNG
  attributes: AttributeSettings;
  style_seed?: number;
  z_o?: number[];
}

export interface SynthesizeResponse {
  image: string; // base64 PNG
  z_o: number[];
}

export interface TraverseRequest {
  attribute: string;
  grid: number[];
  image?: string;
  sketch?: string;
  attributes?: AttributeSettings;
  style_seed?: number;
}

export interface StyleSwapRequest {
  content: string;
  style: string;
  content_sketch?: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit = body === undefined
      ? { method: "GET" }
      : {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(body),
        };
    const res = await this.fetchImpl(this.baseUrl + path, init);
    const payload = await res.json().catch(() => ({}));
    if (!res.ok) {
      const message = (payload as { error?: string }).error ?? `request failed (${res.status})`;
      throw new ApiError(res.status, message);
    }
    return payload as T;
  }

  schema(): Promise<SchemaDoc> {
    return this.request<SchemaDoc>("/v1/schema");
  }

  synthesize(req: SynthesizeRequest): Promise<SynthesizeResponse> {
    return this.request<SynthesizeResponse>("/v1/synthesize", req);
  }

  traverse(req: TraverseRequest): Promise<{ images: string[] }> {
    return this.request<{ images: string[] }>("/v1/traverse", req);
  }

  styleSwap(req: StyleSwapRequest): Promise<{ image: string }> {
    return this.request<{ image: string }>("/v1/style-swap", req);
  }

  reconstruct(image: string): Promise<{ image: string }> {
    return this.request<{ image: string }>("/v1/reconstruct", { image });
  }
}
