// A tiny route-table fetch for unit tests.

export interface Recorded {
  method: string;
  path: string;
  body: unknown;
}

export type Handler = (body: unknown) => { status?: number; json: unknown };

export function mockFetch(routes: Record<string, Handler>) {
  const calls: Recorded[] = [];
  const impl = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    calls.push({ method, path: input, body });
    const handler = routes[`${method} ${input}`];
    if (!handler) {
      return new Response(
        JSON.stringify({ code: "not_found", message: `no route ${method} ${input}`, detail: null }),
        { status: 404, headers: { "Content-Type": "application/json" } },
      );
    }
    const result = handler(body);
    return new Response(JSON.stringify(result.json), {
      status: result.status ?? 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { impl, calls };
}
