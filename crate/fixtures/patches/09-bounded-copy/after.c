static void set_label(struct part *p, const char *src)
{
	strscpy(p->label, src, sizeof(p->label));
	p->dirty = 1;
}
