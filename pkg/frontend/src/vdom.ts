/**
 * Tiny virtual-node layer.
 *
 * Views build plain VNode trees so tests can walk rendered output (which
 * actions appear, which fields carry errors) without a browser. Only the
 * entry point touches the real DOM via renderToDom.
 */

export interface VNode {
  tag: string;
  props: Record<string, unknown>;
  children: Array<VNode | string>;
}

export function h(
  tag: string,
  props: Record<string, unknown> | null = null,
  ...children: Array<VNode | string | null | undefined | false | Array<VNode | string>>
): VNode {
  const flat: Array<VNode | string> = [];
  for (const child of children) {
    if (child === null || child === undefined || child === false) continue;
    if (Array.isArray(child)) flat.push(...child);
    else flat.push(child);
  }
  return { tag, props: props ?? {}, children: flat };
}

/** Depth-first walk; the visitor may return false to skip a subtree. */
export function walk(node: VNode, visit: (node: VNode) => boolean | void): void {
  if (visit(node) === false) return;
  for (const child of node.children) {
    if (typeof child !== "string") walk(child, visit);
  }
}

export function textOf(node: VNode | string): string {
  if (typeof node === "string") return node;
  return node.children.map(textOf).join("");
}

/**
 * Every action name rendered in the tree. The wizard marks transition
 * buttons with data-action; the crawl compares this set against the
 * server's available_actions.
 */
export function collectActions(node: VNode): string[] {
  const actions: string[] = [];
  walk(node, (n) => {
    const action = n.props["data-action"];
    if (typeof action === "string") actions.push(action);
  });
  return actions;
}

export function findAll(node: VNode, pred: (n: VNode) => boolean): VNode[] {
  const hits: VNode[] = [];
  walk(node, (n) => {
    if (pred(n)) hits.push(n);
  });
  return hits;
}

export function findByProp(node: VNode, key: string, value: unknown): VNode | null {
  let hit: VNode | null = null;
  walk(node, (n) => {
    if (hit === null && n.props[key] === value) {
      hit = n;
      return false;
    }
  });
  return hit;
}

type DomDocument = {
  createElement(tag: string): any;
  createTextNode(text: string): any;
};

/** Materialize a tree into real DOM nodes; browser entry point only. */
export function renderToDom(node: VNode, doc: DomDocument): any {
  const el = doc.createElement(node.tag);
  for (const [key, value] of Object.entries(node.props)) {
    if (key.startsWith("on") && typeof value === "function") {
      el.addEventListener(key.slice(2).toLowerCase(), value);
    } else if (key === "class") {
      el.className = String(value);
    } else if (key === "value") {
      el.value = value;
    } else if (key === "innerHTML") {
      el.innerHTML = String(value);
    } else if (value !== false && value !== null && value !== undefined) {
      el.setAttribute(key, value === true ? "" : String(value));
    }
  }
  for (const child of node.children) {
    el.appendChild(typeof child === "string" ? doc.createTextNode(child) : renderToDom(child, doc));
  }
  return el;
}
