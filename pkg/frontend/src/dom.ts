export const SVG_NS = "http://www.w3.org/2000/svg";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

export function svg(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

export function clear(node: Element): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

/** Non-blocking error banner; disappears on click or after a few seconds. */
export function showBanner(message: string): void {
  const host = document.getElementById("banners");
  if (!host) return;
  const banner = el("div", { class: "banner" }, message);
  banner.addEventListener("click", () => banner.remove());
  host.appendChild(banner);
  setTimeout(() => banner.remove(), 8000);
}

export function markStale(panel: Element, stale: boolean): void {
  panel.classList.toggle("stale", stale);
}
