/**
 * Catalogue entry forms: antibodies, mouse lines, cell lines.
 *
 * Enumerated fields render as pick lists so only server-known values can
 * be submitted; free-text fields carry tooltips. Client validation mirrors
 * the server rules but the server response stays authoritative: its field
 * errors are merged into the same per-field message map.
 */

import type { FieldErrors } from "./validation.js";
import { h, VNode } from "./vdom.js";

export const ANTIBODY_KINDS = ["Primary", "Secondary"] as const;
export const CLONALITIES = ["Monoclonal", "Polyclonal"] as const;
export const BREEDING_TYPES = ["Inbred", "Outbred", "Congenic", "Coisogenic", "F1Hybrid"] as const;
export const CELL_LINE_KINDS = ["PatientDerived", "GeneticallyModified"] as const;
export const MUTATION_KINDS = ["TargetedMutation", "Transgene", "KnockIn"] as const;

export interface AntibodyDraft {
  designation: string;
  kind: string;
  clonality: string;
  target: string;
  manufacturer_name: string;
  catalog_number: string;
  rrid: string;
  reactivity_species: string;
  host_species: string;
}

export function emptyAntibodyDraft(): AntibodyDraft {
  return {
    designation: "",
    kind: "Primary",
    clonality: "Monoclonal",
    target: "",
    manufacturer_name: "",
    catalog_number: "",
    rrid: "",
    reactivity_species: "",
    host_species: "",
  };
}

export interface MutationDraft {
  gene_symbol: string;
  mutation_kind: string;
  lab_code: string;
  serial: string;
  construct: string;
}

export function emptyMutationDraft(): MutationDraft {
  return { gene_symbol: "", mutation_kind: "TargetedMutation", lab_code: "", serial: "1", construct: "" };
}

export interface MouseLineDraft {
  background_strain: string;
  breeding_type: string;
  originating_lab: string;
  mutations: MutationDraft[];
  preview: string;
}

export function emptyMouseLineDraft(): MouseLineDraft {
  return {
    background_strain: "",
    breeding_type: "Inbred",
    originating_lab: "",
    mutations: [],
    preview: "",
  };
}

export interface CellLineDraft {
  designation: string;
  kind: string;
  donor_pseudonym: string;
  tissue: string;
  parent_cell_id: string;
  institution_code: string;
  request_standard_name: boolean;
}

export function emptyCellLineDraft(): CellLineDraft {
  return {
    designation: "",
    kind: "PatientDerived",
    donor_pseudonym: "",
    tissue: "",
    parent_cell_id: "",
    institution_code: "",
    request_standard_name: false,
  };
}

// shared field helpers

function fieldError(errors: FieldErrors, name: string): VNode | null {
  const message = errors[name];
  if (!message) return null;
  return h("span", { class: "field-error", "data-error-for": name }, message);
}

export function textField(
  label: string,
  name: string,
  value: string,
  tooltip: string,
  errors: FieldErrors,
  oninput: (value: string) => void,
): VNode {
  return h(
    "label",
    { class: "field" },
    h("span", { class: "field-label", title: tooltip }, label),
    h("input", {
      name,
      value,
      title: tooltip,
      oninput: (e: Event) => oninput((e.target as HTMLInputElement).value),
    }),
    fieldError(errors, name),
  );
}

export function pickList(
  label: string,
  name: string,
  value: string,
  options: readonly string[],
  errors: FieldErrors,
  onchange: (value: string) => void,
): VNode {
  return h(
    "label",
    { class: "field" },
    h("span", { class: "field-label" }, label),
    h(
      "select",
      {
        name,
        onchange: (e: Event) => onchange((e.target as HTMLSelectElement).value),
      },
      options.map((opt) => h("option", { value: opt, selected: opt === value }, opt)),
    ),
    fieldError(errors, name),
  );
}

function formError(errors: FieldErrors): VNode | null {
  if (!errors._form) return null;
  return h("p", { class: "form-error" }, errors._form);
}

// antibody form

export interface AntibodyFormHandlers {
  onChange(patch: Partial<AntibodyDraft>): void;
  onSubmit(): void;
}

export function antibodyForm(
  draft: AntibodyDraft,
  errors: FieldErrors,
  handlers: AntibodyFormHandlers,
): VNode {
  return h(
    "form",
    {
      class: "catalogue-form",
      "data-form": "antibody",
      onsubmit: (e: Event) => {
        e.preventDefault();
        handlers.onSubmit();
      },
    },
    h("h3", null, "Register antibody"),
    formError(errors),
    textField(
      "Designation",
      "designation",
      draft.designation,
      "Working name used on the bench, e.g. anti-PLN rabbit",
      errors,
      (v) => handlers.onChange({ designation: v }),
    ),
    pickList("Kind", "kind", draft.kind, ANTIBODY_KINDS, errors, (v) =>
      handlers.onChange({ kind: v }),
    ),
    pickList("Clonality", "clonality", draft.clonality, CLONALITIES, errors, (v) =>
      handlers.onChange({ clonality: v }),
    ),
    textField(
      "Target",
      "target",
      draft.target,
      "Antigen the antibody binds, e.g. phospholamban",
      errors,
      (v) => handlers.onChange({ target: v }),
    ),
    textField(
      "Manufacturer",
      "manufacturer_name",
      draft.manufacturer_name,
      "Vendor or producing lab",
      errors,
      (v) => handlers.onChange({ manufacturer_name: v }),
    ),
    textField(
      "Catalog number",
      "catalog_number",
      draft.catalog_number,
      "Vendor catalog number, if commercial",
      errors,
      (v) => handlers.onChange({ catalog_number: v }),
    ),
    textField(
      "RRID",
      "rrid",
      draft.rrid,
      "Research resource identifier, format AB_ followed by digits",
      errors,
      (v) => handlers.onChange({ rrid: v }),
    ),
    textField(
      "Reactivity species",
      "reactivity_species",
      draft.reactivity_species,
      "Species the antibody reacts against",
      errors,
      (v) => handlers.onChange({ reactivity_species: v }),
    ),
    textField(
      "Host species",
      "host_species",
      draft.host_species,
      "Species the antibody was raised in",
      errors,
      (v) => handlers.onChange({ host_species: v }),
    ),
    h("button", { type: "submit" }, "Register"),
  );
}

// mouse line form

export interface MouseLineFormHandlers {
  onChange(patch: Partial<MouseLineDraft>): void;
  onMutationChange(index: number, patch: Partial<MutationDraft>): void;
  onAddMutation(): void;
  onRemoveMutation(index: number): void;
  onSubmit(): void;
}

function mutationFields(
  mutation: MutationDraft,
  index: number,
  errors: FieldErrors,
  handlers: MouseLineFormHandlers,
): VNode {
  const key = (field: string) => `mutations.${index}.${field}`;
  return h(
    "fieldset",
    { class: "mutation", "data-mutation": String(index) },
    h("legend", null, `Mutation ${index + 1}`),
    textField(
      "Gene symbol",
      key("gene_symbol"),
      mutation.gene_symbol,
      "Official gene symbol, e.g. Pln",
      errors,
      (v) => handlers.onMutationChange(index, { gene_symbol: v }),
    ),
    pickList("Kind", key("mutation_kind"), mutation.mutation_kind, MUTATION_KINDS, errors, (v) =>
      handlers.onMutationChange(index, { mutation_kind: v }),
    ),
    textField(
      "Lab code",
      key("lab_code"),
      mutation.lab_code,
      "Registered lab code, capital letter then lowercase letters",
      errors,
      (v) => handlers.onMutationChange(index, { lab_code: v }),
    ),
    textField(
      "Serial",
      key("serial"),
      mutation.serial,
      "Allele serial number within the lab, starting at 1",
      errors,
      (v) => handlers.onMutationChange(index, { serial: v }),
    ),
    mutation.mutation_kind === "Transgene"
      ? textField(
          "Construct",
          key("construct"),
          mutation.construct,
          "Transgene construct designation",
          errors,
          (v) => handlers.onMutationChange(index, { construct: v }),
        )
      : null,
    h(
      "button",
      { type: "button", onclick: () => handlers.onRemoveMutation(index) },
      "Remove",
    ),
  );
}

export function mouseLineForm(
  draft: MouseLineDraft,
  errors: FieldErrors,
  handlers: MouseLineFormHandlers,
): VNode {
  return h(
    "form",
    {
      class: "catalogue-form",
      "data-form": "mouse-line",
      onsubmit: (e: Event) => {
        e.preventDefault();
        handlers.onSubmit();
      },
    },
    h("h3", null, "Register mouse line"),
    formError(errors),
    textField(
      "Background strain",
      "background_strain",
      draft.background_strain,
      "Inbred background, e.g. C57BL/6J",
      errors,
      (v) => handlers.onChange({ background_strain: v }),
    ),
    pickList("Breeding type", "breeding_type", draft.breeding_type, BREEDING_TYPES, errors, (v) =>
      handlers.onChange({ breeding_type: v }),
    ),
    textField(
      "Originating lab",
      "originating_lab",
      draft.originating_lab,
      "Lab that created the line",
      errors,
      (v) => handlers.onChange({ originating_lab: v }),
    ),
    draft.mutations.map((m, i) => mutationFields(m, i, errors, handlers)),
    h("button", { type: "button", onclick: () => handlers.onAddMutation() }, "Add mutation"),
    h(
      "p",
      { class: "name-preview" },
      "Name preview: ",
      h("code", { "data-preview": "mouse-line-name" }, draft.preview || "(incomplete)"),
    ),
    h("button", { type: "submit" }, "Register"),
  );
}

// cell line form

export interface CellLineFormHandlers {
  onChange(patch: Partial<CellLineDraft>): void;
  onSubmit(): void;
}

export function cellLineForm(
  draft: CellLineDraft,
  errors: FieldErrors,
  handlers: CellLineFormHandlers,
): VNode {
  return h(
    "form",
    {
      class: "catalogue-form",
      "data-form": "cell-line",
      onsubmit: (e: Event) => {
        e.preventDefault();
        handlers.onSubmit();
      },
    },
    h("h3", null, "Register cell line"),
    formError(errors),
    textField(
      "Designation",
      "designation",
      draft.designation,
      "Working name of the line",
      errors,
      (v) => handlers.onChange({ designation: v }),
    ),
    pickList("Kind", "kind", draft.kind, CELL_LINE_KINDS, errors, (v) =>
      handlers.onChange({ kind: v }),
    ),
    textField(
      "Donor pseudonym",
      "donor_pseudonym",
      draft.donor_pseudonym,
      "Pseudonymous donor identifier, never the real name",
      errors,
      (v) => handlers.onChange({ donor_pseudonym: v }),
    ),
    textField(
      "Tissue",
      "tissue",
      draft.tissue,
      "Tissue of origin",
      errors,
      (v) => handlers.onChange({ tissue: v }),
    ),
    draft.kind === "GeneticallyModified"
      ? textField(
          "Parent cell line",
          "parent_cell_id",
          draft.parent_cell_id,
          "Catalogue id of the parental line",
          errors,
          (v) => handlers.onChange({ parent_cell_id: v }),
        )
      : null,
    h(
      "label",
      { class: "field" },
      h("span", { class: "field-label" }, "Request standard name"),
      h("input", {
        type: "checkbox",
        name: "request_standard_name",
        checked: draft.request_standard_name,
        onchange: (e: Event) =>
          handlers.onChange({ request_standard_name: (e.target as HTMLInputElement).checked }),
      }),
    ),
    draft.request_standard_name
      ? textField(
          "Institution code",
          "institution_code",
          draft.institution_code,
          "Registered institution code for standard names",
          errors,
          (v) => handlers.onChange({ institution_code: v }),
        )
      : null,
    h("button", { type: "submit" }, "Register"),
  );
}

// rating form, kept tiny: the pick list itself makes 6 unreachable

export function ratingPickList(value: number, onchange: (rating: number) => void): VNode {
  return h(
    "select",
    {
      name: "rating",
      "data-form": "rating",
      onchange: (e: Event) => onchange(Number((e.target as HTMLSelectElement).value)),
    },
    [1, 2, 3, 4, 5].map((n) =>
      h("option", { value: String(n), selected: n === value }, String(n)),
    ),
  );
}
