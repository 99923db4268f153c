import { describe, expect, it } from 'vitest';

import { renderResultTable } from '../src/table.js';
import { FIG10_COLUMNS, fig10Table } from './mock_server.js';

describe('render_result_table', () => {
  it('renders every column header and the row count', () => {
    const view = renderResultTable(fig10Table(10), document);
    const headers = Array.from(view.element.querySelectorAll('th')).map(
      (th) => th.textContent,
    );
    expect(headers).toEqual(FIG10_COLUMNS);
    expect(view.element.querySelectorAll('tbody tr')).toHaveLength(10);
    expect(view.element.querySelector('.row-count')?.textContent).toBe('10 rows');
  });

  it('renders exactly the rows the API returned, unfiltered', () => {
    const table = {
      columns: ['n.name'],
      rows: [['b'], ['a'], ['c']],
    };
    const view = renderResultTable(table, document);
    expect(view.visibleRows()).toEqual([['b'], ['a'], ['c']]);
  });

  it('empty table shows a zero row count', () => {
    const view = renderResultTable({ columns: ['n.name'], rows: [] }, document);
    expect(view.element.querySelector('.row-count')?.textContent).toBe('0 rows');
    expect(view.element.querySelectorAll('tbody tr')).toHaveLength(0);
  });

  it('sorting matches a comparator oracle and flips on repeat', () => {
    const rows = [['delta', '2'], ['alpha', '3'], ['charlie', '1'], ['bravo', '4']];
    const view = renderResultTable({ columns: ['n.name', 'n.rule_index'], rows }, document);
    view.sortBy(0);
    const oracle = [...rows].sort((a, b) => a[0].localeCompare(b[0]));
    expect(view.visibleRows()).toEqual(oracle);
    view.sortBy(0);
    expect(view.visibleRows()).toEqual([...oracle].reverse());
    const firstCell = view.element.querySelector('tbody tr td')?.textContent;
    expect(firstCell).toBe('delta');
  });

  it('header click sorts ascending', () => {
    const rows = [['zz'], ['aa'], ['mm']];
    const view = renderResultTable({ columns: ['n.name'], rows }, document);
    const header = view.element.querySelector('th')!;
    header.dispatchEvent(new MouseEvent('click', { bubbles: true }));
    expect(view.visibleRows()).toEqual([['aa'], ['mm'], ['zz']]);
    expect(header.getAttribute('data-order')).toBe('asc');
  });

  it('truncates long rule text and expands on click', () => {
    const longRule = 'If select A310 GPU/RTX 3050 GPU, PSU cannot be 180w. '.repeat(4);
    const view = renderResultTable(
      { columns: ['n.original_rule'], rows: [[longRule]] },
      document,
    );
    const cell = view.element.querySelector('td')!;
    expect(cell.classList.contains('truncated')).toBe(true);
    expect(cell.textContent?.length).toBeLessThan(longRule.length);
    expect(cell.title).toBe(longRule);
    cell.dispatchEvent(new MouseEvent('click', { bubbles: true }));
    expect(cell.textContent).toBe(longRule);
  });
});
