from typing import List, Sequence

from fpdf import FPDF
from fpdf.enums import XPos, YPos


def generate_table_pdf(title: str, details: Sequence[tuple], headers: Sequence[str], rows: Sequence[Sequence[str]],
                       notes: Sequence[str] = ()) -> bytes:
    """Render a titled details block and one table to PDF bytes."""
    pdf = FPDF(orientation="L" if len(headers) > 9 else "P")
    pdf.set_auto_page_break(auto=True, margin=20)
    pdf.add_page()
    width = pdf.w - 20

    # Colors
    primary_color = (33, 86, 143)
    text_color = (31, 41, 55)

    # Header
    pdf.set_font("Helvetica", "B", 22)
    pdf.set_text_color(*primary_color)
    pdf.cell(0, 14, "ROBOTRACE", new_x=XPos.LMARGIN, new_y=YPos.NEXT, align="L")

    pdf.set_font("Helvetica", "B", 10)
    pdf.set_text_color(100, 100, 100)
    pdf.cell(0, 5, title.upper(), new_x=XPos.LMARGIN, new_y=YPos.NEXT, align="L")
    pdf.ln(6)

    # Details block
    if details:
        top = pdf.get_y()
        pdf.set_fill_color(249, 250, 251)
        pdf.rect(10, top, width, 6 * len(details) + 6, "F")
        pdf.set_y(top + 3)
        for label, value in details:
            pdf.set_x(15)
            pdf.set_font("Helvetica", "B", 10)
            pdf.set_text_color(*text_color)
            pdf.cell(45, 6, f"{label}:", new_x=XPos.RIGHT, new_y=YPos.TOP)
            pdf.set_font("Helvetica", "", 10)
            pdf.set_text_color(50, 50, 50)
            pdf.cell(0, 6, str(value), new_x=XPos.LMARGIN, new_y=YPos.NEXT)
        pdf.ln(8)

    # Table header
    first = min(40.0, width / 3)
    rest = (width - first) / max(1, len(headers) - 1)
    widths: List[float] = [first] + [rest] * (len(headers) - 1)
    pdf.set_fill_color(*primary_color)
    pdf.set_text_color(255, 255, 255)
    pdf.set_font("Helvetica", "B", 8)
    for w, head in zip(widths, headers):
        pdf.cell(w, 8, f" {head}", border=0, fill=True)
    pdf.ln(9)

    # Table rows
    pdf.set_text_color(*text_color)
    pdf.set_font("Helvetica", "", 9)
    for row in rows:
        for i, (w, value) in enumerate(zip(widths, row)):
            pdf.set_font("Helvetica", "B" if i == 0 else "", 9)
            pdf.cell(w, 7, f" {value}", border="B", align="L" if i == 0 else "R")
        pdf.ln(7)

    # Footer notes
    if notes:
        pdf.ln(6)
        pdf.set_font("Helvetica", "I", 9)
        pdf.set_text_color(150, 150, 150)
        for note in notes:
            pdf.cell(0, 5, note, new_x=XPos.LMARGIN, new_y=YPos.NEXT)

    return bytes(pdf.output())
