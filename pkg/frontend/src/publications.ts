/**
 * Publication browser: search, filters, export links and the statistics
 * charts. Chart numbers come straight from the /stats payload.
 */

import type { Article, ArticleSearch, Stats } from "./api.js";
import { buildOaChart, buildYearChart, yearChartSvg } from "./charts.js";
import { h, VNode } from "./vdom.js";

export interface PublicationsModel {
  query: ArticleSearch;
  articles: Article[];
  stats: Stats | null;
  error: string | null;
}

export function emptyPublicationsModel(): PublicationsModel {
  return { query: {}, articles: [], stats: null, error: null };
}

export interface PublicationsHandlers {
  onQueryChange(patch: Partial<ArticleSearch>): void;
  onSearch(): void;
  onExport(format: "ris" | "json" | "csv"): void;
  onOpenArticle(articleId: string): void;
}

function authorsLine(article: Article): string {
  return article.authors
    .map((a) => (a.given ? `${a.family}, ${a.given.charAt(0)}.` : a.family))
    .join("; ");
}

function searchForm(model: PublicationsModel, handlers: PublicationsHandlers): VNode {
  const q = model.query;
  return h(
    "form",
    {
      class: "search-form",
      onsubmit: (e: Event) => {
        e.preventDefault();
        handlers.onSearch();
      },
    },
    h("input", {
      name: "text",
      placeholder: "title, author, journal",
      value: q.text ?? "",
      oninput: (e: Event) =>
        handlers.onQueryChange({ text: (e.target as HTMLInputElement).value || undefined }),
    }),
    h("input", {
      name: "year_from",
      type: "number",
      placeholder: "from",
      value: q.year_from ?? "",
      oninput: (e: Event) => {
        const raw = (e.target as HTMLInputElement).value;
        handlers.onQueryChange({ year_from: raw ? Number(raw) : undefined });
      },
    }),
    h("input", {
      name: "year_to",
      type: "number",
      placeholder: "to",
      value: q.year_to ?? "",
      oninput: (e: Event) => {
        const raw = (e.target as HTMLInputElement).value;
        handlers.onQueryChange({ year_to: raw ? Number(raw) : undefined });
      },
    }),
    h(
      "select",
      {
        name: "open_access",
        onchange: (e: Event) => {
          const raw = (e.target as HTMLSelectElement).value;
          handlers.onQueryChange({ open_access: raw === "" ? undefined : raw === "true" });
        },
      },
      h("option", { value: "" }, "any access"),
      h("option", { value: "true", selected: q.open_access === true }, "open access"),
      h("option", { value: "false", selected: q.open_access === false }, "closed"),
    ),
    h("button", { type: "submit" }, "Search"),
  );
}

function exportBar(handlers: PublicationsHandlers): VNode {
  const formats: Array<"ris" | "json" | "csv"> = ["ris", "json", "csv"];
  return h(
    "div",
    { class: "export-bar" },
    "Export:",
    formats.map((fmt) =>
      h(
        "button",
        { type: "button", "data-export": fmt, onclick: () => handlers.onExport(fmt) },
        fmt.toUpperCase(),
      ),
    ),
  );
}

function articleRow(article: Article, handlers: PublicationsHandlers): VNode {
  return h(
    "li",
    { class: "article-row", "data-article": article.article_id },
    h(
      "a",
      { href: "#", onclick: (e: Event) => { e.preventDefault(); handlers.onOpenArticle(article.article_id); } },
      article.title,
    ),
    h("span", { class: "meta" }, ` ${authorsLine(article)} (${article.year})`),
    article.journal ? h("span", { class: "journal" }, ` ${article.journal}`) : null,
    article.open_access ? h("span", { class: "oa-badge", title: "open access" }, "OA") : null,
  );
}

export function statsPanel(stats: Stats): VNode {
  const years = buildYearChart(stats);
  const oa = buildOaChart(stats);
  return h(
    "section",
    { class: "stats-panel" },
    h("h3", null, "Publications per year"),
    h("div", { class: "chart-scroll", innerHTML: yearChartSvg(years) }),
    h("h3", null, "Open access"),
    h(
      "div",
      { class: "oa-summary" },
      h("span", { "data-oa": "open" }, String(oa.open)),
      " open / ",
      h("span", { "data-oa": "closed" }, String(oa.closed)),
      " closed, ",
      h("span", { "data-oa": "ratio" }, oa.percentLabel),
    ),
  );
}

export function publicationsView(
  model: PublicationsModel,
  handlers: PublicationsHandlers,
): VNode {
  return h(
    "section",
    { class: "publications" },
    h("h2", null, "Publications"),
    searchForm(model, handlers),
    model.error ? h("p", { class: "form-error" }, model.error) : null,
    exportBar(handlers),
    h(
      "ul",
      { class: "article-list" },
      model.articles.map((a) => articleRow(a, handlers)),
    ),
    model.stats ? statsPanel(model.stats) : h("p", null, "Loading statistics..."),
  );
}
