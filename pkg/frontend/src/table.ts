import type { ResultTable } from './types.js';

const TRUNCATE_AT = 80;

export type SortOrder = 'asc' | 'desc';

export interface TableView {
  element: HTMLElement;
  /** Sort by column index; repeated calls on the same column flip the order. */
  sortBy(column: number, order?: SortOrder): void;
  /** Current rows in display order (for tests and the neighborhood hook). */
  visibleRows(): string[][];
}

/** Render a result table: every column and row exactly as the API returned
 *  them, client-side sorting on header click, a row count line, and long
 *  cells truncated with the full text one click away. */
export function renderResultTable(
  table: ResultTable,
  doc: Document = document,
  onCellClick?: (columnName: string, value: string) => void,
): TableView {
  const root = doc.createElement('div');
  root.className = 'result-table';

  const el = doc.createElement('table');
  const thead = doc.createElement('thead');
  const headRow = doc.createElement('tr');
  const tbody = doc.createElement('tbody');

  let rows = table.rows.map((row) => [...row]);
  let sortColumn = -1;
  let sortOrder: SortOrder = 'asc';

  const renderBody = () => {
    tbody.textContent = '';
    for (const row of rows) {
      const tr = doc.createElement('tr');
      row.forEach((cell, i) => {
        const td = doc.createElement('td');
        if (cell.length > TRUNCATE_AT) {
          td.textContent = `${cell.slice(0, TRUNCATE_AT)}…`;
          td.title = cell;
          td.classList.add('truncated');
          td.addEventListener('click', () => {
            const expanded = td.classList.toggle('expanded');
            td.textContent = expanded ? cell : `${cell.slice(0, TRUNCATE_AT)}…`;
          });
        } else {
          td.textContent = cell;
          if (onCellClick) {
            td.addEventListener('click', () => onCellClick(table.columns[i], cell));
          }
        }
        tr.appendChild(td);
      });
      tbody.appendChild(tr);
    }
  };

  const sortBy = (column: number, order?: SortOrder) => {
    if (order !== undefined) {
      sortOrder = order;
    } else if (sortColumn === column) {
      sortOrder = sortOrder === 'asc' ? 'desc' : 'asc';
    } else {
      sortOrder = 'asc';
    }
    sortColumn = column;
    rows = [...rows].sort((a, b) => {
      const cmp = a[column].localeCompare(b[column]);
      return sortOrder === 'asc' ? cmp : -cmp;
    });
    for (const th of Array.from(headRow.children)) th.removeAttribute('data-order');
    headRow.children[column]?.setAttribute('data-order', sortOrder);
    renderBody();
  };

  table.columns.forEach((name, i) => {
    const th = doc.createElement('th');
    th.textContent = name;
    th.addEventListener('click', () => sortBy(i));
    headRow.appendChild(th);
  });
  thead.appendChild(headRow);
  el.appendChild(thead);
  el.appendChild(tbody);
  renderBody();

  const count = doc.createElement('div');
  count.className = 'row-count';
  count.textContent = `${table.rows.length} rows`;

  root.appendChild(el);
  root.appendChild(count);
  return {
    element: root,
    sortBy,
    visibleRows: () => rows.map((row) => [...row]),
  };
}
