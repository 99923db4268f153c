import { ChatApi } from './api.js';
import { ChatSession } from './state.js';
import { renderResultTable } from './table.js';
import type { UiMessage, UiState } from './types.js';

/** Wire the chat session to the page. Kept framework-free: the session owns
 *  the state, this layer only projects it into the DOM. */
export function mountApp(root: HTMLElement, api: ChatApi, doc: Document = document): ChatSession {
  const session = new ChatSession(api);

  root.innerHTML = `
    <header>
      <span class="title">Component compatibility assistant</span>
      <span class="spacer"></span>
      <span id="mode-indicator" class="mode"></span>
      <button id="mode-toggle" type="button">switch agent</button>
    </header>
    <main id="messages"></main>
    <aside id="neighborhood" hidden></aside>
    <form id="ask">
      <input id="question" autocomplete="off"
             placeholder="e.g. Tell me the GFX3050 T3 rule about M70t Gen5." />
      <button id="send" type="submit">ask</button>
      <button id="retry" type="button" hidden>retry</button>
    </form>
  `;

  const messagesEl = root.querySelector<HTMLElement>('#messages')!;
  const modeIndicator = root.querySelector<HTMLElement>('#mode-indicator')!;
  const modeToggle = root.querySelector<HTMLButtonElement>('#mode-toggle')!;
  const form = root.querySelector<HTMLFormElement>('#ask')!;
  const input = root.querySelector<HTMLInputElement>('#question')!;
  const sendButton = root.querySelector<HTMLButtonElement>('#send')!;
  const retryButton = root.querySelector<HTMLButtonElement>('#retry')!;
  const neighborhoodEl = root.querySelector<HTMLElement>('#neighborhood')!;

  const renderMessage = (message: UiMessage): HTMLElement => {
    const el = doc.createElement('article');
    el.className = `message ${message.role}${message.isError ? ' error' : ''}`;
    const text = doc.createElement('p');
    text.textContent = message.text;
    el.appendChild(text);
    if (message.table) {
      const view = renderResultTable(message.table, doc, (column, value) => {
        if (column.endsWith('name') && !column.includes('project')) {
          void showNeighborhood(value);
        }
      });
      el.appendChild(view.element);
    }
    if (message.trace) {
      const details = doc.createElement('details');
      details.className = 'trace';
      const summary = doc.createElement('summary');
      summary.textContent = 'trace';
      const pre = doc.createElement('pre');
      pre.textContent = JSON.stringify(message.trace, null, 2);
      details.appendChild(summary);
      details.appendChild(pre);
      el.appendChild(details);
    }
    return el;
  };

  const showNeighborhood = async (name: string) => {
    neighborhoodEl.hidden = false;
    neighborhoodEl.textContent = `looking up ${name}…`;
    try {
      const nodeId = await api.nodeIdByName(name);
      if (nodeId === null) {
        neighborhoodEl.textContent = `no node named ${name}`;
        return;
      }
      const payload = await api.neighbors(nodeId);
      session.selectNode(payload.node.id);
      neighborhoodEl.textContent = '';
      const heading = doc.createElement('h3');
      heading.textContent = `${payload.node.name} (${payload.neighbors.length} linked)`;
      neighborhoodEl.appendChild(heading);
      const list = doc.createElement('ul');
      for (const entry of payload.neighbors) {
        const item = doc.createElement('li');
        const tag = entry.edge.polarity === 'Should' ? 'should' : 'should NOT';
        item.textContent = `${tag} pair with ${entry.node.name} (rule ${entry.edge.provenance_rule_index})`;
        list.appendChild(item);
      }
      neighborhoodEl.appendChild(list);
    } catch (err) {
      neighborhoodEl.textContent = `neighborhood lookup failed: ${String(err)}`;
    }
  };

  const render = (state: UiState) => {
    modeIndicator.textContent = state.mode;
    sendButton.disabled = state.pending;
    modeToggle.disabled = state.pending;
    retryButton.hidden = session.getRetryCandidate() === null;
    messagesEl.textContent = '';
    for (const message of state.history) {
      messagesEl.appendChild(renderMessage(message));
    }
    messagesEl.scrollTop = messagesEl.scrollHeight;
  };

  session.subscribe(render);
  render(session.getState());

  modeToggle.addEventListener('click', () => session.toggleMode());
  retryButton.addEventListener('click', () => void session.retry());
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const question = input.value;
    input.value = '';
    void session.submitQuestion(question);
  });

  return session;
}
