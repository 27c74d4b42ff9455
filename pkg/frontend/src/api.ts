/** Typed client for the annotation service's HTTP+JSON endpoints. */

export interface LexiconResponse {
  schema_version: number;
  tokens: string[];
  function_words: string[];
  refs: string[];
}

export interface Violation {
  token: string;
  position: number;
}

export interface GraphDocument {
  nodes: { id: number; label: string }[];
  edges: { from: number; to: number }[];
}

export interface ValidateResponse {
  schema_version: number;
  violations: Violation[][];
  operators: (string | null)[];
  graph: GraphDocument | null;
  errors: string[];
}

export interface QuestionResponse {
  schema_version: number;
  id: string;
  text: string;
}

export interface SubmitResponse {
  schema_version: number;
  id: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`request failed with status ${status}`);
  }
}

/** All server traffic goes through this client; the base URL is the single
 * piece of configuration the UI needs. */
export class AnnotateApiClient {
  constructor(readonly baseUrl: string) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.json().catch(() => null));
    }
    return (await response.json()) as T;
  }

  lexicon(questionText: string): Promise<LexiconResponse> {
    return this.post<LexiconResponse>("/lexicon", { question_text: questionText });
  }

  validate(questionText: string, steps: string[], mode = "standard"): Promise<ValidateResponse> {
    return this.post<ValidateResponse>("/validate", {
      question_text: questionText,
      steps,
      mode,
    });
  }

  submit(record: {
    question_id: string;
    question_text: string;
    steps: string[];
    annotator_id: string;
    mode?: string;
  }): Promise<SubmitResponse> {
    return this.post<SubmitResponse>("/annotations", record);
  }

  async nextQuestion(split?: string): Promise<QuestionResponse | null> {
    const query = split ? `?split=${encodeURIComponent(split)}` : "";
    const response = await fetch(`${this.baseUrl}/questions${query}`);
    if (response.status === 404) {
      return null;
    }
    if (!response.ok) {
      throw new ApiError(response.status, await response.json().catch(() => null));
    }
    return (await response.json()) as QuestionResponse;
  }
}
