/**
 * Workflow wizard: the microscopy and echo request flows.
 *
 * Transition buttons are rendered from the case's available_actions and
 * from nothing else. The server computes that set per requester, so a
 * button never appears whose transition the server would reject; there is
 * deliberately no local copy of the transition table to drift out of
 * sync. On a 409 the caller refetches the case and re-renders, replacing
 * the stale view instead of guessing.
 */

import type { WorkflowCase } from "./api.js";
import { h, VNode } from "./vdom.js";

export interface StainingDraft {
  antibody_id: string;
  abbreviation: string;
}

export interface SampleDraft {
  sample_id: string;
  species: string;
}

export interface ConsultationDraft {
  stainings: StainingDraft[];
  samples: SampleDraft[];
}

export function emptyConsultationDraft(): ConsultationDraft {
  return {
    stainings: [{ antibody_id: "", abbreviation: "" }],
    samples: [{ sample_id: "", species: "" }],
  };
}

export interface WizardHandlers {
  /** Plain transition from available_actions; never AssignEvaluator. */
  onAction(action: string): void;
  onAssignEvaluator(userId: string): void;
  onConsultationChange(draft: ConsultationDraft): void;
  onRecordConsultation(): void;
  onUploadDataset(file: File): void;
  onDownloadLabels(): void;
}

export interface WizardModel {
  theCase: WorkflowCase;
  isStaff: boolean;
  consultation: ConsultationDraft;
  error: string | null;
  evaluatorInput: string;
}

const STEP_SEQUENCES: Record<string, string[]> = {
  ALMN: [
    "Requested",
    "InConsultation",
    "LabelsIssued",
    "AwaitingData",
    "DataStored",
    "Closed",
  ],
  ECHO: [
    "Requested",
    "UnderReview",
    "Accepted",
    "InProgress",
    "Finished",
    "UnderEvaluation",
    "Evaluated",
  ],
};

function stepStrip(theCase: WorkflowCase): VNode {
  const steps = STEP_SEQUENCES[theCase.kind] ?? [];
  const current = steps.indexOf(theCase.state);
  return h(
    "ol",
    { class: "step-strip" },
    steps.map((step, i) =>
      h(
        "li",
        {
          class:
            step === theCase.state
              ? "step current"
              : current >= 0 && i < current
                ? "step done"
                : "step",
        },
        step,
      ),
    ),
    // Rejected and InfoRequested sit off the main line
    steps.indexOf(theCase.state) === -1
      ? h("li", { class: "step current off-path" }, theCase.state)
      : null,
  );
}

function auditTrail(theCase: WorkflowCase): VNode {
  return h(
    "details",
    { class: "audit" },
    h("summary", null, `History (${theCase.audit_trail.length})`),
    h(
      "ol",
      null,
      theCase.audit_trail.map((entry) =>
        h(
          "li",
          null,
          `${entry.timestamp} ${entry.actor}: ${entry.from_state ?? "(created)"} -> ${entry.to_state}`,
          entry.note ? h("em", null, ` ${entry.note}`) : null,
        ),
      ),
    ),
  );
}

function actionButtons(model: WizardModel, handlers: WizardHandlers): VNode {
  const buttons = model.theCase.available_actions.map((action) => {
    if (action === "AssignEvaluator") {
      // separate endpoint: needs the evaluator's user id
      return h(
        "span",
        { class: "assign-evaluator" },
        h("input", {
          name: "evaluator_user_id",
          placeholder: "evaluator user id",
          value: model.evaluatorInput,
        }),
        h(
          "button",
          {
            type: "button",
            "data-action": action,
            onclick: () => handlers.onAssignEvaluator(model.evaluatorInput),
          },
          "Assign evaluator",
        ),
      );
    }
    return h(
      "button",
      { type: "button", "data-action": action, onclick: () => handlers.onAction(action) },
      action,
    );
  });
  return h("div", { class: "actions" }, buttons);
}

function consultationForm(model: WizardModel, handlers: WizardHandlers): VNode {
  const draft = model.consultation;
  const patchStaining = (i: number, patch: Partial<StainingDraft>) => {
    const stainings = draft.stainings.map((s, j) => (j === i ? { ...s, ...patch } : s));
    handlers.onConsultationChange({ ...draft, stainings });
  };
  const patchSample = (i: number, patch: Partial<SampleDraft>) => {
    const samples = draft.samples.map((s, j) => (j === i ? { ...s, ...patch } : s));
    handlers.onConsultationChange({ ...draft, samples });
  };
  return h(
    "form",
    {
      class: "consultation",
      "data-form": "consultation",
      onsubmit: (e: Event) => {
        e.preventDefault();
        handlers.onRecordConsultation();
      },
    },
    h("h4", null, "Consultation: stainings and samples"),
    h(
      "div",
      { class: "stainings" },
      draft.stainings.map((s, i) =>
        h(
          "p",
          null,
          h("input", {
            placeholder: "antibody id",
            value: s.antibody_id,
            oninput: (e: Event) =>
              patchStaining(i, { antibody_id: (e.target as HTMLInputElement).value }),
          }),
          h("input", {
            placeholder: "abbreviation",
            value: s.abbreviation,
            oninput: (e: Event) =>
              patchStaining(i, { abbreviation: (e.target as HTMLInputElement).value }),
          }),
        ),
      ),
      h(
        "button",
        {
          type: "button",
          onclick: () =>
            handlers.onConsultationChange({
              ...draft,
              stainings: [...draft.stainings, { antibody_id: "", abbreviation: "" }],
            }),
        },
        "Add staining",
      ),
    ),
    h(
      "div",
      { class: "samples" },
      draft.samples.map((s, i) =>
        h(
          "p",
          null,
          h("input", {
            placeholder: "sample id",
            value: s.sample_id,
            oninput: (e: Event) =>
              patchSample(i, { sample_id: (e.target as HTMLInputElement).value }),
          }),
          h("input", {
            placeholder: "species",
            value: s.species,
            oninput: (e: Event) =>
              patchSample(i, { species: (e.target as HTMLInputElement).value }),
          }),
        ),
      ),
      h(
        "button",
        {
          type: "button",
          onclick: () =>
            handlers.onConsultationChange({
              ...draft,
              samples: [...draft.samples, { sample_id: "", species: "" }],
            }),
        },
        "Add sample",
      ),
    ),
    h("button", { type: "submit" }, "Record consultation"),
  );
}

function uploadPanel(handlers: WizardHandlers): VNode {
  return h(
    "p",
    { class: "upload", "data-panel": "dataset-upload" },
    h("label", null, "Dataset archive (zip): "),
    h("input", {
      type: "file",
      accept: ".zip,application/zip",
      onchange: (e: Event) => {
        const file = (e.target as HTMLInputElement).files?.[0];
        if (file) handlers.onUploadDataset(file);
      },
    }),
  );
}

function hasLabels(theCase: WorkflowCase): boolean {
  const labels = theCase.payload["labels"];
  return Array.isArray(labels) && labels.length > 0;
}

export function wizardView(model: WizardModel, handlers: WizardHandlers): VNode {
  const c = model.theCase;
  return h(
    "section",
    { class: "wizard", "data-case": c.case_id },
    h("h2", null, `${c.kind} case ${c.case_id}`),
    stepStrip(c),
    h("p", { class: "state-line" }, "State: ", h("strong", null, c.state)),
    model.error ? h("p", { class: "form-error" }, model.error) : null,
    actionButtons(model, handlers),
    // extra panels are state-gated too; none of them is a transition
    c.kind === "ALMN" && c.state === "InConsultation" && model.isStaff
      ? consultationForm(model, handlers)
      : null,
    hasLabels(c)
      ? h(
          "p",
          null,
          h(
            "button",
            { type: "button", "data-download": "labels", onclick: () => handlers.onDownloadLabels() },
            "Download labels.csv",
          ),
        )
      : null,
    c.kind === "ALMN" && c.state === "AwaitingData" ? uploadPanel(handlers) : null,
    c.dataset_packages.length > 0
      ? h(
          "p",
          { class: "packages" },
          `Dataset packages: ${c.dataset_packages.join(", ")}`,
        )
      : null,
    auditTrail(c),
  );
}

// case list / review queue

export interface CaseListHandlers {
  onOpenCase(caseId: string): void;
  onNewCase(kind: "ALMN" | "ECHO"): void;
}

export function caseListView(cases: WorkflowCase[], handlers: CaseListHandlers): VNode {
  return h(
    "section",
    { class: "case-list" },
    h("h2", null, "Workflow cases"),
    h(
      "p",
      null,
      h(
        "button",
        { type: "button", onclick: () => handlers.onNewCase("ALMN") },
        "New microscopy request",
      ),
      h(
        "button",
        { type: "button", onclick: () => handlers.onNewCase("ECHO") },
        "New echo request",
      ),
    ),
    h(
      "ul",
      null,
      cases.map((c) =>
        h(
          "li",
          { "data-case": c.case_id },
          h(
            "a",
            {
              href: "#",
              onclick: (e: Event) => {
                e.preventDefault();
                handlers.onOpenCase(c.case_id);
              },
            },
            `${c.kind} ${c.case_id}`,
          ),
          ` ${c.state}`,
        ),
      ),
    ),
  );
}
