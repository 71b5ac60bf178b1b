/**
 * Client-side form validation.
 *
 * These mirror the server's checks so most mistakes are caught before a
 * round trip, but the server stays authoritative: anything it rejects is
 * mapped back onto the same field names via ApiError.fields.
 */

import type { MutationSpec } from "./api.js";

export type FieldErrors = Record<string, string>;

// same patterns the service enforces
const DOI_RE = /^10\.\d{4,9}\/\S+$/;
const LAB_CODE_RE = /^[A-Z][a-z]+$/;
const MIN_YEAR = 1800;

export interface ArticleForm {
  title: string;
  authors: { family: string; given: string }[];
  year: number | null;
  doi?: string;
  pmid?: string;
}

export function validateArticle(form: ArticleForm): FieldErrors {
  const errors: FieldErrors = {};
  if (!form.title.trim()) errors.title = "title must not be empty";
  const maxYear = new Date().getFullYear() + 1;
  if (
    form.year === null ||
    !Number.isInteger(form.year) ||
    form.year < MIN_YEAR ||
    form.year > maxYear
  ) {
    errors.year = `year must be between ${MIN_YEAR} and ${maxYear}`;
  }
  if (form.doi && !DOI_RE.test(form.doi)) {
    errors.doi = "DOI must look like 10.xxxx/suffix";
  }
  if (form.pmid && !/^\d+$/.test(form.pmid)) {
    errors.pmid = "PMID must be digits only";
  }
  if (form.authors.some((a) => !a.family.trim())) {
    errors.authors = "every author needs a family name";
  }
  return errors;
}

export interface AntibodyForm {
  kind: "Primary" | "Secondary";
  designation: string;
  target: string;
  manufacturer_name: string;
  reactivity_species?: string;
}

export function validateAntibody(form: AntibodyForm): FieldErrors {
  const errors: FieldErrors = {};
  if (!form.designation.trim()) errors.designation = "designation must not be empty";
  if (!form.target.trim()) errors.target = "target must not be empty";
  if (!form.manufacturer_name.trim()) {
    errors.manufacturer_name = "manufacturer is required";
  }
  if (form.kind === "Secondary" && !(form.reactivity_species ?? "").trim()) {
    errors.reactivity_species = "secondary antibodies record reactivity species";
  }
  return errors;
}

/** Assessment ratings are whole stars, 1 through 5; anything else never leaves the form. */
export function validateRating(rating: number): FieldErrors {
  if (!Number.isInteger(rating) || rating < 1 || rating > 5) {
    return { rating: "rating must be an integer from 1 to 5" };
  }
  return {};
}

export interface MouseLineForm {
  background_strain: string;
  mutations: MutationSpec[];
}

export function validateMouseLine(form: MouseLineForm): FieldErrors {
  const errors: FieldErrors = {};
  if (!form.background_strain.trim()) {
    errors.background_strain = "background strain must not be empty";
  }
  form.mutations.forEach((m, i) => {
    if (!LAB_CODE_RE.test(m.lab_code)) {
      errors[`mutations.${i}.lab_code`] = "lab code is a capitalized word, e.g. Goe";
    }
    if (m.serial === null || !Number.isInteger(m.serial) || m.serial < 1) {
      errors[`mutations.${i}.serial`] = "serial must be a whole number >= 1";
    }
    if (m.mutation_kind === "Transgene" && !(m.construct ?? "").trim()) {
      errors[`mutations.${i}.construct`] = "a transgene needs its construct";
    }
  });
  return errors;
}

export interface CellLineForm {
  kind: "PatientDerived" | "GeneticallyModified";
  donor_pseudonym: string;
  parent_cell_id?: string;
  request_standard_name?: boolean;
  institution_code?: string;
}

export function validateCellLine(form: CellLineForm): FieldErrors {
  const errors: FieldErrors = {};
  if (!form.donor_pseudonym.trim()) {
    errors.donor_pseudonym = "donor pseudonym must not be empty";
  }
  if (form.kind === "GeneticallyModified" && !form.parent_cell_id) {
    errors.parent_cell_id = "a modified line descends from a parent line";
  }
  if (form.kind === "PatientDerived" && form.parent_cell_id) {
    errors.parent_cell_id = "only modified derivatives have a parent";
  }
  if (form.request_standard_name && !(form.institution_code ?? "").trim()) {
    errors.institution_code = "standard names need the institution code";
  }
  return errors;
}

/** Map a server rejection onto the form's field error slots. */
export function serverFieldErrors(
  fields: string[],
  message: string,
): FieldErrors {
  const errors: FieldErrors = {};
  for (const field of fields) errors[field] = message;
  if (fields.length === 0) errors["_form"] = message;
  return errors;
}
