/**
 * Typed client for the portal's /api/v1 surface.
 *
 * Every call goes over HTTP; nothing here reaches into server storage.
 * Errors arrive in one envelope ({"error": {code, message, fields?}})
 * and are rethrown as ApiError so views can map them onto form fields.
 */

export interface LoginResponse {
  token: string;
  user_id: string;
  expires_at: string;
  family_name: string;
  given_name: string;
  orcid: string;
  is_facility_staff: boolean;
}

export interface Membership {
  group_id: string;
  role: string;
}

export interface Me {
  user_id: string;
  family_name: string;
  given_name: string;
  orcid: string;
  is_facility_staff: boolean;
  memberships: Membership[];
}

export interface Acl {
  scope: "public" | "project" | "group" | "private";
  owner_user_id?: string | null;
  owning_group_id?: string | null;
}

export interface Author {
  family: string;
  given: string;
  orcid?: string | null;
}

export interface Article {
  article_id: string;
  title: string;
  authors: Author[];
  year: number;
  journal: string;
  publication_type: string;
  open_access: boolean;
  doi: string | null;
  pmid: string | null;
  volume: string | null;
  start_page: string | null;
  acl: Acl;
}

export interface ArticleSearch {
  text?: string;
  year_from?: number;
  year_to?: number;
  group?: string;
  publication_type?: string;
  open_access?: boolean;
}

export interface Stats {
  per_year: { year: number; count: number }[];
  open_access: { open: number; closed: number; ratio: number };
}

export interface Antibody {
  antibody_id: string;
  kind: "Primary" | "Secondary";
  designation: string;
  target: string;
  host_species: string;
  clonality: "Monoclonal" | "Polyclonal";
  manufacturer_name: string;
  catalog_number: string;
  antibody_registry_id: string | null;
  antibodypedia_url: string | null;
  reactivity_species: string;
  acl: Acl;
  pid: string | null;
}

export interface MutationSpec {
  gene_symbol: string;
  mutation_kind: "TargetedMutation" | "Transgene" | "KnockIn";
  lab_code: string;
  serial: number | null;
  gene_ncbi_id?: string | null;
  construct?: string | null;
}

export interface MouseLine {
  line_id: string;
  background_strain: string;
  breeding_type: string;
  originating_lab: string;
  mutations: MutationSpec[];
  generated_name: string;
  acl: Acl;
  pid: string | null;
}

export interface CellLine {
  cell_id: string;
  kind: "PatientDerived" | "GeneticallyModified";
  diagnosis: string;
  donor_pseudonym: string;
  ethics_approval_reference: string;
  standardized_name: string | null;
  parent_cell_id: string | null;
  acl: Acl;
  pid: string | null;
}

export interface AuditEntry {
  timestamp: string;
  actor: string;
  from_state: string | null;
  to_state: string;
  note: string;
}

export interface WorkflowCase {
  case_id: string;
  kind: "ALMN" | "ECHO";
  requester: string;
  group_id: string;
  state: string;
  payload: Record<string, unknown>;
  audit_trail: AuditEntry[];
  dataset_packages: string[];
  acl: Acl;
  pid: string | null;
  /** Per-requester edge set; render actions from this and nothing else. */
  available_actions: string[];
}

export interface AssetLink {
  article_id: string;
  asset_kind: string;
  asset_id: string;
}

export class ApiError extends Error {
  status: number;
  code: string;
  fields: string[];

  constructor(status: number, code: string, message: string, fields?: string[]) {
    super(message);
    this.status = status;
    this.code = code;
    this.fields = fields ?? [];
  }
}

interface ErrorEnvelope {
  error?: { code?: string; message?: string; fields?: string[] };
}

async function raiseFor(res: Response): Promise<never> {
  let code = "http_error";
  let message = `HTTP ${res.status}`;
  let fields: string[] | undefined;
  try {
    const body = (await res.json()) as ErrorEnvelope;
    if (body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
      fields = body.error.fields;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(res.status, code, message, fields);
}

export class ApiClient {
  baseUrl: string;
  token: string | null = null;

  constructor(baseUrl = "") {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private headers(extra?: Record<string, string>): Record<string, string> {
    const h: Record<string, string> = { ...extra };
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async getJson<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path, { headers: this.headers() });
    if (!res.ok) await raiseFor(res);
    return (await res.json()) as T;
  }

  private async send<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: this.headers(
        body === undefined ? {} : { "Content-Type": "application/json" },
      ),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) await raiseFor(res);
    return (await res.json()) as T;
  }

  // -- session -------------------------------------------------------

  async login(usernameOrOrcid: string, password: string): Promise<LoginResponse> {
    const out = await this.send<LoginResponse>("POST", "/api/v1/auth/login", {
      username_or_orcid: usernameOrOrcid,
      password,
    });
    this.token = out.token;
    return out;
  }

  async logout(): Promise<void> {
    await this.send("POST", "/api/v1/auth/logout");
    this.token = null;
  }

  me(): Promise<Me> {
    return this.getJson("/api/v1/me");
  }

  // -- publications --------------------------------------------------

  searchArticles(q: ArticleSearch = {}): Promise<Article[]> {
    const params = new URLSearchParams();
    if (q.text) params.set("text", q.text);
    if (q.year_from !== undefined) params.set("year_from", String(q.year_from));
    if (q.year_to !== undefined) params.set("year_to", String(q.year_to));
    if (q.group) params.set("group", q.group);
    if (q.publication_type) params.set("publication_type", q.publication_type);
    if (q.open_access !== undefined) params.set("open_access", String(q.open_access));
    const suffix = params.toString() ? `?${params}` : "";
    return this.getJson(`/api/v1/articles${suffix}`);
  }

  createArticle(body: Record<string, unknown>): Promise<Article> {
    return this.send("POST", "/api/v1/articles", body);
  }

  importPublication(ref: { pmid?: string; doi?: string }): Promise<Article> {
    return this.send("POST", "/api/v1/imports/publication", ref);
  }

  linkAsset(articleId: string, assetKind: string, assetId: string): Promise<AssetLink> {
    return this.send("POST", `/api/v1/articles/${articleId}/links`, {
      asset_kind: assetKind,
      asset_id: assetId,
    });
  }

  async articleJsonLd(articleId: string): Promise<Record<string, unknown>> {
    const res = await fetch(`${this.baseUrl}/api/v1/articles/${articleId}`, {
      headers: this.headers({ Accept: "application/ld+json" }),
    });
    if (!res.ok) await raiseFor(res);
    return (await res.json()) as Record<string, unknown>;
  }

  stats(): Promise<Stats> {
    return this.getJson("/api/v1/stats/publications");
  }

  /** Download URL for an export button; the browser follows it as-is. */
  exportUrl(format: "ris" | "csv" | "json"): string {
    return `${this.baseUrl}/api/v1/publications/export?format=${format}`;
  }

  async fetchExport(format: "ris" | "csv" | "json"): Promise<string> {
    const res = await fetch(this.exportUrl(format), { headers: this.headers() });
    if (!res.ok) await raiseFor(res);
    return res.text();
  }

  // -- catalogues ----------------------------------------------------

  listAntibodies(text?: string): Promise<Antibody[]> {
    const suffix = text ? `?text=${encodeURIComponent(text)}` : "";
    return this.getJson(`/api/v1/antibodies${suffix}`);
  }

  createAntibody(body: Record<string, unknown>): Promise<Antibody> {
    return this.send("POST", "/api/v1/antibodies", body);
  }

  recordAssessment(
    antibodyId: string,
    body: { application: string; rating: number; comment?: string },
  ): Promise<Record<string, unknown>> {
    return this.send("POST", `/api/v1/antibodies/${antibodyId}/assessments`, body);
  }

  previewMouseLineName(
    backgroundStrain: string,
    mutations: MutationSpec[],
  ): Promise<{ name: string }> {
    return this.send("POST", "/api/v1/mouse-lines/preview-name", {
      background_strain: backgroundStrain,
      mutations,
    });
  }

  createMouseLine(body: Record<string, unknown>): Promise<MouseLine> {
    return this.send("POST", "/api/v1/mouse-lines", body);
  }

  createCellLine(body: Record<string, unknown>): Promise<CellLine> {
    return this.send("POST", "/api/v1/cell-lines", body);
  }

  // -- workflows -----------------------------------------------------

  listCases(filter?: { kind?: string; state?: string }): Promise<WorkflowCase[]> {
    const params = new URLSearchParams();
    if (filter?.kind) params.set("kind", filter.kind);
    if (filter?.state) params.set("state", filter.state);
    const suffix = params.toString() ? `?${params}` : "";
    return this.getJson(`/api/v1/cases${suffix}`);
  }

  getCase(caseId: string): Promise<WorkflowCase> {
    return this.getJson(`/api/v1/cases/${caseId}`);
  }

  createCase(body: Record<string, unknown>): Promise<WorkflowCase> {
    return this.send("POST", "/api/v1/cases", body);
  }

  caseAction(caseId: string, action: string, note = ""): Promise<WorkflowCase> {
    return this.send("POST", `/api/v1/cases/${caseId}/actions`, { action, note });
  }

  recordConsultation(
    caseId: string,
    stainings: { antibody_id: string; abbreviation: string }[],
    samples: { sample_id: string; species: string }[],
  ): Promise<{ labels: Record<string, unknown>[] }> {
    return this.send("POST", `/api/v1/cases/${caseId}/consultation`, {
      stainings,
      samples,
    });
  }

  labelsCsvUrl(caseId: string): string {
    return `${this.baseUrl}/api/v1/cases/${caseId}/labels.csv`;
  }

  async fetchLabelsCsv(caseId: string): Promise<string> {
    const res = await fetch(this.labelsCsvUrl(caseId), { headers: this.headers() });
    if (!res.ok) await raiseFor(res);
    return res.text();
  }

  async uploadDataset(
    caseId: string,
    data: Blob | ArrayBuffer | Uint8Array,
  ): Promise<{ package_id: string; images: Record<string, unknown>[] }> {
    const res = await fetch(`${this.baseUrl}/api/v1/cases/${caseId}/dataset`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/zip" }),
      body: data as BodyInit,
    });
    if (!res.ok) await raiseFor(res);
    return (await res.json()) as { package_id: string; images: Record<string, unknown>[] };
  }

  assignEvaluator(caseId: string, userId: string): Promise<WorkflowCase> {
    return this.send("POST", `/api/v1/cases/${caseId}/evaluator`, { user_id: userId });
  }
}
