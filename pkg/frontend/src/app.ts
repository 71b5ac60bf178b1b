/**
 * Application shell: session handling, routing, and the glue between the
 * API client and the views. This is the only module that touches the
 * real DOM, and only inside functions, so everything else stays testable
 * without a browser.
 */

import { ApiClient, ApiError, WorkflowCase } from "./api.js";
import {
  AntibodyDraft,
  antibodyForm,
  CellLineDraft,
  cellLineForm,
  emptyAntibodyDraft,
  emptyCellLineDraft,
  emptyMouseLineDraft,
  MouseLineDraft,
  mouseLineForm,
  MutationDraft,
} from "./catalogues.js";
import { emptyPublicationsModel, PublicationsModel, publicationsView } from "./publications.js";
import { ViewState } from "./state.js";
import {
  FieldErrors,
  serverFieldErrors,
  validateAntibody,
  validateCellLine,
  validateMouseLine,
} from "./validation.js";
import { h, renderToDom, VNode } from "./vdom.js";
import {
  caseListView,
  ConsultationDraft,
  emptyConsultationDraft,
  wizardView,
} from "./wizard.js";

type Route = "publications" | "catalogues" | "cases" | "case-detail";

export class App {
  readonly api: ApiClient;
  readonly view: ViewState;
  private root: Element | null = null;
  private route: Route = "publications";

  private publications: PublicationsModel = emptyPublicationsModel();
  private formErrors = new Map<string, FieldErrors>();
  private previewTimer: ReturnType<typeof setTimeout> | null = null;
  private cases: WorkflowCase[] = [];
  private openCase: WorkflowCase | null = null;
  private caseError: string | null = null;
  private loginError: string | null = null;

  constructor(api: ApiClient, view: ViewState) {
    this.api = api;
    this.view = view;
  }

  mount(root: Element): void {
    this.root = root;
    this.render();
  }

  private render(): void {
    if (!this.root) return;
    const tree = this.rootView();
    this.root.replaceChildren(renderToDom(tree, document));
  }

  private rootView(): VNode {
    if (!this.view.session) return this.loginView();
    return h(
      "div",
      { class: "app" },
      this.navView(),
      this.route === "publications"
        ? publicationsView(this.publications, {
            onQueryChange: (patch) => {
              Object.assign(this.publications.query, patch);
            },
            onSearch: () => void this.loadPublications(),
            onExport: (fmt) => {
              window.open(this.api.exportUrl(fmt), "_blank");
            },
            onOpenArticle: (id) => void this.showArticle(id),
          })
        : null,
      this.route === "catalogues" ? this.cataloguesView() : null,
      this.route === "cases"
        ? caseListView(this.cases, {
            onOpenCase: (id) => void this.showCase(id),
            onNewCase: (kind) => void this.createCase(kind),
          })
        : null,
      this.route === "case-detail" && this.openCase
        ? wizardView(
            {
              theCase: this.openCase,
              isStaff: this.view.session?.isFacilityStaff ?? false,
              consultation: this.consultationDraft(),
              error: this.caseError,
              evaluatorInput: this.evaluatorInput,
            },
            {
              onAction: (action) => void this.runCaseAction(action),
              onAssignEvaluator: (userId) => void this.runAssignEvaluator(userId),
              onConsultationChange: (draft) => {
                this.view.setDraft("consultation", draft);
                this.render();
              },
              onRecordConsultation: () => void this.recordConsultation(),
              onUploadDataset: (file) => void this.uploadDataset(file),
              onDownloadLabels: () => {
                if (this.openCase) {
                  window.open(this.api.labelsCsvUrl(this.openCase.case_id), "_blank");
                }
              },
            },
          )
        : null,
    );
  }

  private navView(): VNode {
    const link = (route: Route, label: string) =>
      h(
        "a",
        {
          href: "#",
          class: this.route === route ? "active" : "",
          onclick: (e: Event) => {
            e.preventDefault();
            this.goto(route);
          },
        },
        label,
      );
    return h(
      "nav",
      null,
      link("publications", "Publications"),
      link("catalogues", "Catalogues"),
      link("cases", "Workflows"),
      h("span", { class: "spacer" }),
      h("span", { class: "whoami" }, this.view.session?.displayName ?? ""),
      h(
        "button",
        {
          type: "button",
          onclick: () => {
            void this.api.logout().catch(() => undefined);
            this.view.endSession();
            this.render();
          },
        },
        "Log out",
      ),
    );
  }

  private loginView(): VNode {
    let user = "";
    let password = "";
    return h(
      "form",
      {
        class: "login",
        onsubmit: (e: Event) => {
          e.preventDefault();
          void this.login(user, password);
        },
      },
      h("h2", null, "Sign in"),
      this.loginError ? h("p", { class: "form-error" }, this.loginError) : null,
      h("input", {
        name: "user",
        placeholder: "user id or ORCID",
        oninput: (e: Event) => {
          user = (e.target as HTMLInputElement).value;
        },
      }),
      h("input", {
        name: "password",
        type: "password",
        oninput: (e: Event) => {
          password = (e.target as HTMLInputElement).value;
        },
      }),
      h("button", { type: "submit" }, "Sign in"),
    );
  }

  private async login(user: string, password: string): Promise<void> {
    try {
      const res = await this.api.login(user, password);
      this.view.startSession({
        token: res.token,
        userId: res.user_id,
        displayName: `${res.given_name} ${res.family_name}`,
        isFacilityStaff: res.is_facility_staff,
      });
      this.loginError = null;
      this.goto("publications");
    } catch (err) {
      this.loginError = err instanceof ApiError ? err.message : "login failed";
      this.render();
    }
  }

  goto(route: Route): void {
    this.route = route;
    if (route === "publications") void this.loadPublications();
    if (route === "cases") void this.loadCases();
    this.render();
  }

  private async loadPublications(): Promise<void> {
    try {
      const [articles, stats] = await Promise.all([
        this.api.searchArticles(this.publications.query),
        this.api.stats(),
      ]);
      this.publications.articles = articles;
      this.publications.stats = stats;
      this.publications.error = null;
    } catch (err) {
      this.publications.error = err instanceof ApiError ? err.message : String(err);
    }
    this.render();
  }

  private async showArticle(articleId: string): Promise<void> {
    const doc = await this.api.articleJsonLd(articleId);
    window.alert(JSON.stringify(doc, null, 2));
  }

  // catalogues

  private cataloguesView(): VNode {
    const antibody = this.view.draft<AntibodyDraft>("antibody", emptyAntibodyDraft);
    const mouse = this.view.draft<MouseLineDraft>("mouse-line", emptyMouseLineDraft);
    const cell = this.view.draft<CellLineDraft>("cell-line", emptyCellLineDraft);
    return h(
      "div",
      { class: "catalogues" },
      antibodyForm(antibody, this.errors("antibody"), {
        onChange: (patch) => {
          Object.assign(antibody, patch);
          this.render();
        },
        onSubmit: () => void this.submitAntibody(antibody),
      }),
      mouseLineForm(mouse, this.errors("mouse-line"), {
        onChange: (patch) => {
          Object.assign(mouse, patch);
          this.schedulePreview(mouse);
          this.render();
        },
        onMutationChange: (index, patch) => {
          Object.assign(mouse.mutations[index], patch);
          this.schedulePreview(mouse);
          this.render();
        },
        onAddMutation: () => {
          mouse.mutations.push({
            gene_symbol: "",
            mutation_kind: "TargetedMutation",
            lab_code: "",
            serial: "1",
            construct: "",
          });
          this.render();
        },
        onRemoveMutation: (index) => {
          mouse.mutations.splice(index, 1);
          this.schedulePreview(mouse);
          this.render();
        },
        onSubmit: () => void this.submitMouseLine(mouse),
      }),
      cellLineForm(cell, this.errors("cell-line"), {
        onChange: (patch) => {
          Object.assign(cell, patch);
          this.render();
        },
        onSubmit: () => void this.submitCellLine(cell),
      }),
    );
  }

  private errors(formId: string): FieldErrors {
    return this.formErrors.get(formId) ?? {};
  }

  private async submitAntibody(draft: AntibodyDraft): Promise<void> {
    const errors = validateAntibody(draft);
    if (Object.keys(errors).length > 0) {
      this.formErrors.set("antibody", errors);
      this.render();
      return;
    }
    try {
      await this.api.createAntibody({
        designation: draft.designation,
        kind: draft.kind,
        clonality: draft.clonality,
        target: draft.target,
        manufacturer_name: draft.manufacturer_name,
        catalog_number: draft.catalog_number || null,
        rrid: draft.rrid || null,
        reactivity_species: draft.reactivity_species || null,
        host_species: draft.host_species || null,
      });
      this.formErrors.delete("antibody");
      this.view.submitSucceeded("antibody");
    } catch (err) {
      this.applyServerErrors("antibody", err);
    }
    this.render();
  }

  static mutationBody(m: MutationDraft): Record<string, unknown> {
    return {
      gene_symbol: m.gene_symbol,
      mutation_kind: m.mutation_kind,
      lab_code: m.lab_code,
      serial: m.serial === "" ? null : Number(m.serial),
      construct: m.construct || null,
    };
  }

  private schedulePreview(draft: MouseLineDraft): void {
    // live preview; debounce so we do not hammer the endpoint per keystroke
    if (this.previewTimer !== null) clearTimeout(this.previewTimer);
    this.previewTimer = setTimeout(() => {
      this.previewTimer = null;
      void this.refreshPreview(draft);
    }, 250);
  }

  private async refreshPreview(draft: MouseLineDraft): Promise<void> {
    if (!draft.background_strain) return;
    try {
      const res = await this.api.previewMouseLineName(
        draft.background_strain,
        draft.mutations.map(App.mutationBody),
      );
      draft.preview = res.name;
    } catch {
      draft.preview = "";
    }
    this.render();
  }

  private async submitMouseLine(draft: MouseLineDraft): Promise<void> {
    const errors = validateMouseLine(draft);
    if (Object.keys(errors).length > 0) {
      this.formErrors.set("mouse-line", errors);
      this.render();
      return;
    }
    try {
      await this.api.createMouseLine({
        background_strain: draft.background_strain,
        breeding_type: draft.breeding_type,
        originating_lab: draft.originating_lab,
        mutations: draft.mutations.map(App.mutationBody),
      });
      this.formErrors.delete("mouse-line");
      this.view.submitSucceeded("mouse-line");
    } catch (err) {
      this.applyServerErrors("mouse-line", err);
    }
    this.render();
  }

  private async submitCellLine(draft: CellLineDraft): Promise<void> {
    const errors = validateCellLine(draft);
    if (Object.keys(errors).length > 0) {
      this.formErrors.set("cell-line", errors);
      this.render();
      return;
    }
    try {
      await this.api.createCellLine({
        designation: draft.designation,
        kind: draft.kind,
        donor_pseudonym: draft.donor_pseudonym,
        tissue: draft.tissue || null,
        parent_cell_id: draft.parent_cell_id || null,
        request_standard_name: draft.request_standard_name,
        institution_code: draft.institution_code || null,
      });
      this.formErrors.delete("cell-line");
      this.view.submitSucceeded("cell-line");
    } catch (err) {
      this.applyServerErrors("cell-line", err);
    }
    this.render();
  }

  private applyServerErrors(formId: string, err: unknown): void {
    if (err instanceof ApiError) {
      this.formErrors.set(formId, serverFieldErrors(err.fields ?? [], err.message));
    } else {
      this.formErrors.set(formId, { _form: String(err) });
    }
  }

  // workflows

  private evaluatorInput = "";

  private consultationDraft(): ConsultationDraft {
    return this.view.draft<ConsultationDraft>("consultation", emptyConsultationDraft);
  }

  private async loadCases(): Promise<void> {
    try {
      this.cases = await this.api.listCases();
    } catch {
      this.cases = [];
    }
    this.render();
  }

  private async showCase(caseId: string): Promise<void> {
    this.openCase = await this.api.getCase(caseId);
    this.caseError = null;
    this.route = "case-detail";
    this.render();
  }

  private async createCase(kind: "ALMN" | "ECHO"): Promise<void> {
    const groupId = window.prompt("Owning group id?") ?? "";
    if (!groupId) return;
    const created = await this.api.createCase({ kind, group_id: groupId, payload: {} });
    await this.showCase(created.case_id);
  }

  /**
   * Transitions go through here so every failure path resolves the same
   * way: re-fetch the case and render whatever the server now says. A
   * 409 in particular means our view was stale, not that the click was
   * wrong.
   */
  private async runCaseAction(action: string): Promise<void> {
    if (!this.openCase) return;
    const caseId = this.openCase.case_id;
    try {
      this.openCase = await this.api.caseAction(caseId, action);
      this.caseError = null;
    } catch (err) {
      await this.resyncCase(caseId, err);
    }
    this.render();
  }

  private async runAssignEvaluator(userId: string): Promise<void> {
    if (!this.openCase) return;
    const caseId = this.openCase.case_id;
    try {
      this.openCase = await this.api.assignEvaluator(caseId, userId);
      this.caseError = null;
      this.evaluatorInput = "";
    } catch (err) {
      await this.resyncCase(caseId, err);
    }
    this.render();
  }

  private async recordConsultation(): Promise<void> {
    if (!this.openCase) return;
    const caseId = this.openCase.case_id;
    const draft = this.consultationDraft();
    try {
      await this.api.recordConsultation(caseId, draft.stainings, draft.samples);
      this.view.submitSucceeded("consultation");
      this.openCase = await this.api.getCase(caseId);
      this.caseError = null;
    } catch (err) {
      await this.resyncCase(caseId, err);
    }
    this.render();
  }

  private async uploadDataset(file: File): Promise<void> {
    if (!this.openCase) return;
    const caseId = this.openCase.case_id;
    try {
      await this.api.uploadDataset(caseId, file);
      this.openCase = await this.api.getCase(caseId);
      this.caseError = null;
    } catch (err) {
      await this.resyncCase(caseId, err);
    }
    this.render();
  }

  private async resyncCase(caseId: string, err: unknown): Promise<void> {
    this.caseError = err instanceof ApiError ? err.message : String(err);
    try {
      this.openCase = await this.api.getCase(caseId);
    } catch {
      // the case may no longer be visible; fall back to the list
      this.openCase = null;
      this.route = "cases";
      await this.loadCases();
    }
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const app = new App(new ApiClient(""), new ViewState());
  app.mount(root);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
