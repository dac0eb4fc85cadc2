# coding: utf-8
import re
import sys
import textwrap
from shutil import get_terminal_size

from .getconfig import logger, colors, ptcolors


def getTermWidth():
    termWidth = get_terminal_size()[0]
    if termWidth < 5:
        logger.warning("Your detected terminal width is: " + str(get_terminal_size()[0]))
        termWidth = 999999999
    return termWidth


termWidth = getTermWidth()

try:
    if ptcolors.get("displaymethod") != "prompt-toolkit":
        raise ModuleNotFoundError
    from prompt_toolkit import print_formatted_text
    from prompt_toolkit.formatted_text import to_formatted_text
    ptoolkit_available = True
    logger.debug("Python Prompt Toolkit has been imported for colored output.")
except (ImportError, ModuleNotFoundError):
    ptoolkit_available = False


def use_ptoolkit():
    # prompt_toolkit needs a real terminal to render styles
    return ptoolkit_available and sys.stdout.isatty()


def pad_text(text, width, sep=' '):
    while len(text) < width:
        text += sep
    return text


def fill_text(text, width):
    texts = text.split('\n')
    for i in range(0, len(texts)):
        texts[i] = textwrap.fill(
            texts[i],
            width,
            replace_whitespace=False,
            drop_whitespace=False
        )
    return '\n'.join(texts)


# ECMA-48 set graphics codes for the curious. Check out "man console_codes"
def output(text1, col1=None, wrap=False, end="\n"):
    """Print text in the color named by col1."""
    if wrap:
        text1 = fill_text(text1, termWidth)
        text1 = re.sub(r"\n[ \t]+", "\n", text1)

    if use_ptoolkit():
        style = ptcolors.get(col1, "") if col1 else ""
        print_formatted_text(to_formatted_text(text1, style), end='')
        print('', end=end)
    else:
        code = colors.get(col1, "") if col1 else ""
        code = code if code and code[0].isdigit() else None
        clb1 = "\x1B[{}m".format(code) if code else ""
        cle1 = "\x1B[0m" if code else ""
        print(clb1 + text1 + cle1, end=end)


def format_value(value):
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def output_table(header, rows, col='table-row'):
    """Print rows under a header with every column padded to its widest cell."""
    cells = [[format_value(v) for v in row] for row in rows]
    widths = [len(h) for h in header]
    for row in cells:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    output("  ".join(pad_text(h, w) for h, w in zip(header, widths)), 'table-header')
    for row in cells:
        output("  ".join(pad_text(c, w) for c, w in zip(row, widths)), col)
