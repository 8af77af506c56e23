import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function mockFetch(status: number, payload: unknown) {
  return vi.fn(async () => new Response(JSON.stringify(payload), { status }));
}

describe("ApiClient", () => {
  it("fetches the schema with GET", async () => {
    const doc = {
      attributes: ["a"], attribute_count: 1, style_dim: 2,
      image_size: 16, with_sketch: true, model_id: "m",
    };
    const fetchImpl = mockFetch(200, doc);
    const api = new ApiClient("http://svc", fetchImpl);
    expect(await api.schema()).toEqual(doc);
    const [url, init] = fetchImpl.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("http://svc/v1/schema");
    expect(init.method).toBe("GET");
  });

  it("posts JSON bodies for generation calls", async () => {
    const fetchImpl = mockFetch(200, { images: ["x"] });
    const api = new ApiClient("http://svc", fetchImpl);
    await api.traverse({ attribute: "a", grid: [-2, 2], image: "img" });
    const [url, init] = fetchImpl.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("http://svc/v1/traverse");
    expect(init.method).toBe("POST");
    expect(JSON.parse(String(init.body))).toEqual({ attribute: "a", grid: [-2, 2], image: "img" });
  });

  it("raises ApiError with the service message on failure", async () => {
    const api = new ApiClient("http://svc", mockFetch(400, { error: "missing attributes" }));
    await expect(api.reconstruct("img")).rejects.toMatchObject(
      new ApiError(400, "missing attributes"),
    );
  });

  it("handles non-JSON error bodies", async () => {
    const fetchImpl = vi.fn(async () => new Response("boom", { status: 503 }));
    const api = new ApiClient("http://svc", fetchImpl);
    await expect(api.schema()).rejects.toBeInstanceOf(ApiError);
  });
});
