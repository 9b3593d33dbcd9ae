// Tiny element builder; no framework, views are plain functions of data.

export type Child = Node | string | null | undefined;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number | boolean | ((ev: Event) => void)> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    if (typeof value === 'function') {
      node.addEventListener(name.replace(/^on/, ''), value as EventListener);
    } else if (typeof value === 'boolean') {
      if (value) node.setAttribute(name, '');
      else node.removeAttribute(name);
    } else {
      node.setAttribute(name, String(value));
    }
  }
  for (const child of children) {
    if (child == null) continue;
    node.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return node;
}

export function clear(container: HTMLElement): void {
  while (container.firstChild) container.removeChild(container.firstChild);
}

export function errorPanel(message: string, onRetry?: () => void): HTMLElement {
  const panel = el('div', { class: 'error-panel', role: 'alert' }, message);
  if (onRetry) {
    panel.append(
      el('button', { type: 'button', onclick: () => onRetry() }, 'Retry'),
    );
  }
  return panel;
}
