FG_256_TEMPLATE = "\x1b[38;2;{r};{g};{b}m"
BOLD = "\x1b[1m"
RESET = "\x1b[0m"

GREEN = (80, 200, 120)
RED = (230, 80, 80)
YELLOW = (230, 200, 80)
CYAN = (90, 180, 230)


def rgb2ansi256(r: int, g: int, b: int) -> str:
    """
    Convert an RGB color to an ANSI foreground escape code

    Parameters:
    - r (int): the red value
    - g (int): the green value
    - b (int): the blue value

    Returns:
    - str: the ANSI escape code representation of the color

    Raises:
    - ValueError: if r, g, or b are not between 0 and 255
    """
    for name, value in (("r", r), ("g", g), ("b", b)):
        if value < 0 or value > 255:
            raise ValueError(f"{name} must be between 0 and 255")
    return FG_256_TEMPLATE.format(r=r, g=g, b=b)


def paint(text: str, rgb, enabled: bool = True, bold: bool = False) -> str:
    """ Wrap text in a color, or return it untouched when colors are off """
    if not enabled:
        return text
    return f"{BOLD if bold else ''}{rgb2ansi256(*rgb)}{text}{RESET}"
